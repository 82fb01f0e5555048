#pragma once

#include "mtp2/assembler.hpp"
#include "mtp2/errors.hpp"
#include "mtp2/extensions.hpp"
#include "mtp2/graph.hpp"
#include "mtp2/io.hpp"
#include "mtp2/matrix.hpp"
#include "mtp2/parallel.hpp"
#include "mtp2/rng.hpp"
#include "mtp2/subsolver.hpp"
#include "mtp2/synthetic.hpp"
#include "mtp2/verifier.hpp"
