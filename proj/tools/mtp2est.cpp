// mtp2est: estimation of sparse MTP2 Gaussian graphical models by bridge-block
// decomposition of the thresholded covariance graph.
//
// Subcommands: estimate, decompose, synth, bench, verify.
// Exit codes: 0 ok, 2 bad flags or file format, 3 uniqueness assumption
// violated, 4 solver did not converge (best iterate still written), 5
// verification failed.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mtp2/mtp2.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFormat = 2;
constexpr int kExitAssumption = 3;
constexpr int kExitNoConvergence = 4;
constexpr int kExitVerifyFailed = 5;

struct MatrixInputs {
    std::string cov_path;
    std::string data_path;
    std::string lambda_path;
    double chi = 0.0;
    double eps = 1e-3;
    int ddof = 0;
};

void add_matrix_inputs(CLI::App* cmd, MatrixInputs& in) {
    auto* cov = cmd->add_option("--cov", in.cov_path, "Sample covariance (Matrix Market)");
    auto* data = cmd->add_option("--data", in.data_path,
                                 "Raw data CSV, n rows x p columns; covariance uses 1/(n-ddof)");
    cov->excludes(data);
    auto* lam = cmd->add_option("--lambda", in.lambda_path, "Regularizer (Matrix Market)");
    auto* chi = cmd->add_option("--chi", in.chi,
                                "Derive the regularizer: Lambda_ij = chi/(|Theta0_ij| + eps)");
    lam->excludes(chi);
    cmd->add_option("--eps", in.eps, "Epsilon of the derived regularizer")->capture_default_str();
    cmd->add_option("--ddof", in.ddof, "Covariance denominator n - ddof for --data")
        ->capture_default_str();
}

mtp2::SymmetricMatrix load_covariance(const MatrixInputs& in) {
    if (!in.cov_path.empty()) return mtp2::read_matrix_market(in.cov_path);
    if (!in.data_path.empty())
        return mtp2::covariance_from_data(mtp2::read_csv_matrix(in.data_path), in.ddof);
    throw mtp2::FormatError("one of --cov or --data is required");
}

mtp2::SymmetricMatrix load_lambda(const MatrixInputs& in, const mtp2::SymmetricMatrix& s) {
    if (!in.lambda_path.empty()) {
        auto lam = mtp2::read_matrix_market(in.lambda_path);
        if (lam.dim() != s.dim())
            throw mtp2::FormatError("--lambda dimension does not match the covariance");
        return lam;
    }
    if (in.chi > 0.0) return mtp2::build_regularizer(s, in.chi, in.eps);
    throw mtp2::FormatError("one of --lambda or --chi is required");
}

struct SolverFlags {
    double tol = 1e-8;
    int max_iter = 100000;
    std::string method = "pgd";
    int threads = 0;

    mtp2::SolverConfig config() const {
        mtp2::SolverConfig cfg;
        cfg.tolerance = tol;
        cfg.max_iterations = max_iter;
        cfg.method = method == "bcd" ? mtp2::SolveMethod::BCD : mtp2::SolveMethod::PGD;
        return cfg;
    }
};

void add_solver_flags(CLI::App* cmd, SolverFlags& flags) {
    cmd->add_option("--tol", flags.tol, "KKT residual tolerance")->capture_default_str();
    cmd->add_option("--max-iter", flags.max_iter, "Iteration cap per sub-problem")
        ->capture_default_str();
    cmd->add_option("--method", flags.method, "Sub-problem solver")
        ->check(CLI::IsMember({"pgd", "bcd"}))
        ->capture_default_str();
    cmd->add_option("--threads", flags.threads, "Worker threads (0 = hardware)")
        ->capture_default_str();
}

nlohmann::json config_echo(const MatrixInputs& in, const SolverFlags& flags, bool decompose) {
    nlohmann::json j;
    if (!in.cov_path.empty()) j["cov"] = in.cov_path;
    if (!in.data_path.empty()) j["data"] = in.data_path;
    if (!in.lambda_path.empty()) j["lambda"] = in.lambda_path;
    if (in.chi > 0.0) {
        j["chi"] = in.chi;
        j["eps"] = in.eps;
    }
    j["tol"] = flags.tol;
    j["max_iter"] = flags.max_iter;
    j["method"] = flags.method;
    j["threads"] = flags.threads;
    j["decompose"] = decompose;
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw mtp2::FormatError(path + ": cannot open for writing");
    out << j.dump(2) << "\n";
}

void write_trace_csv(const std::string& path, const std::vector<mtp2::TracePoint>& trace) {
    std::ofstream out(path);
    if (!out) throw mtp2::FormatError(path + ": cannot open for writing");
    out << "iteration,seconds,relative_error\n";
    for (const auto& point : trace)
        out << point.iteration << "," << point.seconds << "," << point.relative_error << "\n";
}

// ---------------------------------------------------------------------------

int run_estimate(const MatrixInputs& in, const SolverFlags& flags, bool no_decompose,
                 const std::string& partition_path, const std::string& out_path,
                 const std::string& report_path, const std::string& trace_path,
                 const std::string& reference_path) {
    const auto s = load_covariance(in);
    const auto lam = load_lambda(in, s);

    mtp2::EstimateOptions opts;
    opts.decompose = !no_decompose && partition_path.empty();
    opts.threads = flags.threads;
    nlohmann::json echo = config_echo(in, flags, opts.decompose);

    std::pair<mtp2::AssembledSolution, mtp2::EstimationReport> run;
    if (!partition_path.empty()) {
        // warm start from a caller-provided vertex partition, then solve the
        // full problem monolithically from that initializer
        const auto t = mtp2::threshold(s, lam);
        const auto clusters = mtp2::read_partition_file(partition_path, s.dim());
        const auto part = mtp2::VertexPartition::make(clusters, t);
        std::optional<mtp2::SymmetricMatrix> init;
        try {
            init = mtp2::warm_start(s, lam, part, flags.config(),
                                    flags.threads > 0 ? flags.threads : mtp2::hardware_threads());
            echo["warm_start"] = "partition";
        } catch (const mtp2::NotPositiveDefinite&) {
            echo["warm_start"] = "diagonal-fallback";  // indefinite initializer rejected
        }
        const auto t_solve = std::chrono::steady_clock::now();
        mtp2::SubSolution sub = mtp2::solve_subproblem(s, lam, flags.config(), std::move(init));
        const double solve_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - t_solve)
                                    .count();
        mtp2::EstimationReport report;
        report.p = s.dim();
        report.edge_count = static_cast<long long>(t.entries().size());
        report.cluster_count = 1;
        report.cluster_sizes = {s.dim()};
        report.cluster_solve_ms = {solve_ms};
        report.cluster_iterations = {sub.iterations};
        report.total_ms = solve_ms;
        report.kkt_residual = sub.residual;
        report.objective = sub.objective;
        report.converged = sub.converged;
        report.decomposed = false;
        report.threads = 1;
        mtp2::AssembledSolution sol;
        sol.theta = sub.theta_hat;
        sol.zeta = Eigen::VectorXd::Zero(s.dim());
        sol.cluster_solutions.push_back(std::move(sub));
        run = {std::move(sol), std::move(report)};
    } else {
        run = mtp2::estimate(s, lam, flags.config(), opts);
    }
    auto& sol = run.first;
    auto& report = run.second;
    report.config_echo = echo.dump();

    mtp2::write_matrix_market_sparse(out_path, sol.theta);
    if (!report_path.empty()) write_json(report_path, mtp2::report_to_json(report));

    if (!trace_path.empty()) {
        if (reference_path.empty())
            throw mtp2::FormatError("--trace requires --reference (optimum for the RE metric)");
        const auto reference = mtp2::read_matrix_market(reference_path);
        const double f_star = mtp2::objective(reference, s, lam);
        const auto trace =
            opts.decompose
                ? mtp2::decomposed_re_trace(s, lam, flags.config(), f_star, 0.0, 3600.0)
                : mtp2::monolithic_re_trace(s, lam, flags.config(), f_star, 0.0, 3600.0);
        write_trace_csv(trace_path, trace);
    }

    std::printf("p=%d edges=%lld bridges=%lld clusters=%d kkt=%.3e objective=%.12g time=%.1fms\n",
                report.p, report.edge_count, report.bridge_count, report.cluster_count,
                report.kkt_residual, report.objective, report.total_ms);
    if (!report.converged) {
        std::fprintf(stderr, "warning: solver did not reach tolerance; best iterate written\n");
        return kExitNoConvergence;
    }
    return kExitOk;
}

int run_decompose(const MatrixInputs& in, const std::string& report_path) {
    const auto s = load_covariance(in);
    const auto lam = load_lambda(in, s);
    const auto t = mtp2::threshold(s, lam);
    const auto g = mtp2::support_graph(t);
    const auto bridges = mtp2::find_bridges(g);
    const auto part = mtp2::bridge_block_decomposition(g, bridges);

    nlohmann::json j;
    j["p"] = s.dim();
    j["edges"] = g.edge_count();
    j["bridges"] = nlohmann::json::array();
    for (const auto& b : bridges) j["bridges"].push_back({b.first + 1, b.second + 1});
    j["clusters"] = part.cluster_count();
    std::vector<int> sizes;
    for (const auto& cluster : part.clusters) sizes.push_back(static_cast<int>(cluster.size()));
    j["cluster_sizes"] = sizes;
    if (!report_path.empty()) write_json(report_path, j);

    std::printf("p=%d edges=%d bridges=%zu clusters=%d\n", s.dim(), g.edge_count(),
                bridges.size(), part.cluster_count());
    std::printf("bridge list (1-based):");
    for (const auto& b : bridges) std::printf(" (%d,%d)", b.first + 1, b.second + 1);
    std::printf("\ncluster sizes:");
    for (int size : sizes) std::printf(" %d", size);
    std::printf("\n");
    return kExitOk;
}

int run_synth(const std::string& model, int p, int ba_order, int blocks, double within,
              double between, int cluster_size, double alpha, std::uint64_t seed, int n,
              double chi, double eps, const std::string& prefix) {
    mtp2::SyntheticInstance inst;
    if (model == "chain") {
        if (cluster_size < 3) throw mtp2::FormatError("--model chain requires --cluster-size >= 3");
        inst = mtp2::make_chain_instance(blocks, cluster_size, seed, chi, eps, alpha);
    } else {
        mtp2::GeneratorConfig cfg;
        cfg.p = p;
        cfg.model = model == "sbm" ? mtp2::GraphModel::SBM : mtp2::GraphModel::BA;
        cfg.ba_order = ba_order;
        cfg.sbm_blocks = blocks;
        cfg.sbm_within = within;
        cfg.sbm_between = between;
        cfg.seed = seed;
        cfg.n_samples = n;
        cfg.chi = chi;
        cfg.eps = eps;
        inst = mtp2::make_instance(cfg);
    }

    const std::string a_path = prefix + "_adjacency.mtx";
    const std::string theta_path = prefix + "_theta_true.mtx";
    const std::string s_path = prefix + "_S.mtx";
    const std::string lam_path = prefix + "_lambda.mtx";
    mtp2::write_matrix_market_graph(a_path, inst.graph);
    mtp2::write_matrix_market_sparse(theta_path, inst.theta_true, 0.0);
    mtp2::write_matrix_market_dense(s_path, inst.s);
    mtp2::write_matrix_market_dense(lam_path, inst.lam);

    nlohmann::json manifest;
    manifest["model"] = model;
    manifest["p"] = inst.s.dim();
    manifest["seed"] = seed;
    manifest["seed_used"] = inst.seed_used;
    manifest["regenerations"] = inst.regenerations;
    manifest["n_samples"] = inst.config.samples();
    manifest["chi"] = chi;
    manifest["eps"] = eps;
    if (model == "ba") manifest["ba_order"] = ba_order;
    if (model == "sbm") {
        manifest["blocks"] = blocks;
        manifest["within"] = within;
        manifest["between"] = between;
    }
    if (model == "chain") {
        manifest["blocks"] = blocks;
        manifest["cluster_size"] = cluster_size;
        manifest["alpha"] = alpha;
    }
    manifest["files"] = {
        {"adjacency", {{"path", a_path}, {"fnv1a", mtp2::fnv1a_file(a_path)}}},
        {"theta_true", {{"path", theta_path}, {"fnv1a", mtp2::fnv1a_file(theta_path)}}},
        {"S", {{"path", s_path}, {"fnv1a", mtp2::fnv1a_file(s_path)}}},
        {"lambda", {{"path", lam_path}, {"fnv1a", mtp2::fnv1a_file(lam_path)}}},
    };
    write_json(prefix + "_manifest.json", manifest);

    std::printf("wrote %s_{adjacency,theta_true,S,lambda}.mtx and %s_manifest.json (p=%d)\n",
                prefix.c_str(), prefix.c_str(), inst.s.dim());
    return kExitOk;
}

int run_bench_traces(const mtp2::SymmetricMatrix& s, const mtp2::SymmetricMatrix& lam,
                     const SolverFlags& flags, double target_re, double budget,
                     const std::string& prefix) {
    mtp2::SolverConfig tight = flags.config();
    tight.tolerance = std::min(tight.tolerance, 1e-10);
    const auto reference = mtp2::estimate(s, lam, tight);
    const double f_star = mtp2::objective(reference.first.theta, s, lam);

    const auto decomposed =
        mtp2::decomposed_re_trace(s, lam, flags.config(), f_star, target_re, budget);
    const auto monolithic =
        mtp2::monolithic_re_trace(s, lam, flags.config(), f_star, target_re, budget);
    write_trace_csv(prefix + "_trace_decomposed.csv", decomposed);
    write_trace_csv(prefix + "_trace_monolithic.csv", monolithic);

    const auto reached = [&](const std::vector<mtp2::TracePoint>& trace) {
        return !trace.empty() && trace.back().relative_error < target_re;
    };
    const double t_dec = decomposed.empty() ? 0.0 : decomposed.back().seconds;
    const double t_mono = monolithic.empty() ? 0.0 : monolithic.back().seconds;
    std::printf("decomposed: %s target in %.4fs; monolithic: %s target in %.4fs; ratio %.1f%s\n",
                reached(decomposed) ? "reached" : "missed", t_dec,
                reached(monolithic) ? "reached" : "missed", t_mono, t_mono / std::max(t_dec, 1e-9),
                reached(monolithic) ? "" : " (lower bound)");
    return kExitOk;
}

int run_bench_grid(const std::vector<int>& grid_k, const std::vector<int>& grid_size, int trials,
                   const SolverFlags& flags, double target_re, double budget, double chi,
                   double eps, double alpha, std::uint64_t seed, const std::string& prefix) {
    const std::string path = prefix + "_ratio_grid.csv";
    std::ofstream out(path);
    if (!out) throw mtp2::FormatError(path + ": cannot open for writing");
    out << "clusters,cluster_size,p,trial,seconds_decomposed,seconds_monolithic,ratio,"
           "lower_bound\n";
    std::printf("%8s %12s %6s %8s %12s\n", "clusters", "cluster_size", "trial", "ratio", "median");
    for (int k : grid_k) {
        for (int size : grid_size) {
            std::vector<double> ratios;
            for (int trial = 0; trial < trials; ++trial) {
                const auto inst = mtp2::make_chain_instance(
                    k, size, seed + 1000ULL * static_cast<std::uint64_t>(trial) + k * 17ULL + size,
                    chi, eps, alpha);
                const auto result =
                    mtp2::ratio_of_improvement(inst, flags.config(), target_re, budget);
                ratios.push_back(result.ratio);
                out << k << "," << size << "," << k * size << "," << trial << ","
                    << result.seconds_decomposed << "," << result.seconds_monolithic << ","
                    << result.ratio << "," << (result.monolithic_lower_bound ? 1 : 0) << "\n";
                std::printf("%8d %12d %6d %8.2f\n", k, size, trial, result.ratio);
            }
            std::sort(ratios.begin(), ratios.end());
            std::printf("%8d %12d %6s %8s %12.2f\n", k, size, "-", "-",
                        ratios[ratios.size() / 2]);
        }
    }
    std::printf("wrote %s\n", path.c_str());
    return kExitOk;
}

int run_verify(const std::string& theta_path, const MatrixInputs& in, double tol, bool with_r) {
    const auto theta = mtp2::read_matrix_market(theta_path);
    const auto s = load_covariance(in);
    const auto lam = load_lambda(in, s);
    if (theta.dim() != s.dim()) throw mtp2::FormatError("--theta dimension mismatch");
    const int p = s.dim();

    bool ok = true;
    const auto t = mtp2::threshold(s, lam);
    const auto support = mtp2::support_graph(t);

    // KKT certificate
    double kkt = std::numeric_limits<double>::infinity();
    try {
        const auto r = mtp2::invert(mtp2::factorize(theta));
        kkt = mtp2::kkt_residual(theta, r, s, lam);
    } catch (const mtp2::NotPositiveDefinite&) {
        std::printf("positive definite:      FAIL\n");
        ok = false;
    }
    if (std::isfinite(kkt)) {
        std::printf("kkt residual:           %.3e (tol %.1e) %s\n", kkt, tol,
                    kkt <= tol ? "PASS" : "FAIL");
        ok = ok && kkt <= tol;
    }

    // structural checks with the 1e-10 support cutoff
    std::vector<mtp2::Edge> theta_edges;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (std::abs(theta(i, j)) > 1e-10) theta_edges.emplace_back(i, j);
    bool contained = true;
    for (const auto& e : theta_edges)
        contained = contained &&
                    std::binary_search(support.edges().begin(), support.edges().end(), e);
    std::printf("support containment:    %s\n", contained ? "PASS" : "FAIL");
    ok = ok && contained;

    const mtp2::UndirectedGraph theta_graph(p, theta_edges);
    const auto lbl_t = mtp2::connected_components(support);
    const auto lbl_o = mtp2::connected_components(theta_graph);
    const bool components_equal = *std::max_element(lbl_t.begin(), lbl_t.end()) ==
                                  *std::max_element(lbl_o.begin(), lbl_o.end());
    std::printf("component count:        %s\n", components_equal ? "PASS" : "FAIL");
    ok = ok && components_equal;

    const auto bridges_t = mtp2::find_bridges(support);
    const auto bridges_o = mtp2::find_bridges(theta_graph);
    bool bridges_preserved = true;
    for (const auto& b : bridges_t)
        bridges_preserved = bridges_preserved &&
                            std::binary_search(bridges_o.begin(), bridges_o.end(), b);
    std::printf("bridge preservation:    %s\n", bridges_preserved ? "PASS" : "FAIL");
    ok = ok && bridges_preserved;

    if (with_r) {
        const auto part = mtp2::bridge_block_decomposition(support, bridges_t);
        std::vector<mtp2::SymmetricMatrix> r_hats;
        for (int k = 0; k < part.cluster_count(); ++k) {
            const auto block = theta.submatrix(part.clusters[k]);
            // remove the zeta corrections to recover the cluster block
            mtp2::SymmetricMatrix bare = block;
            for (int local = 0; local < block.dim(); ++local) {
                const int v = part.clusters[k][local];
                bare.add(local, local, -mtp2::zeta(v, part.bridges, t, s));
            }
            r_hats.push_back(mtp2::invert(mtp2::factorize(bare)));
        }
        const auto r = mtp2::build_R(r_hats, part, t, s, support);
        const auto witness = mtp2::verify_inverse(theta, r, 1e-8);
        std::printf("|Theta*R - I| residual: %.3e %s\n", witness.max_identity_residual,
                    witness.passed ? "PASS" : "FAIL");
        ok = ok && witness.passed;
    }

    std::printf("verification:           %s\n", ok ? "PASS" : "FAIL");
    return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse MTP2 Gaussian graphical model estimation via bridge-block decomposition"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate the precision matrix");
    MatrixInputs est_in;
    SolverFlags est_flags;
    bool no_decompose = false;
    std::string est_out = "theta.mtx", est_report, est_trace, est_reference, est_partition;
    add_matrix_inputs(est, est_in);
    add_solver_flags(est, est_flags);
    est->add_flag("--no-decompose", no_decompose, "Solve monolithically (no decomposition)");
    est->add_option("--out", est_out, "Output precision matrix (sparse Matrix Market)")
        ->capture_default_str();
    est->add_option("--report", est_report, "JSON run report");
    est->add_option("--partition", est_partition,
                    "Vertex partition file (one cluster per line, 1-based); warm-starts a "
                    "monolithic solve");
    est->add_option("--trace", est_trace, "Per-iteration RE trace CSV (needs --reference)");
    est->add_option("--reference", est_reference, "Reference optimum for the RE trace");

    // decompose
    auto* dec = app.add_subcommand("decompose", "Inspect the bridge-block decomposition");
    MatrixInputs dec_in;
    std::string dec_report;
    add_matrix_inputs(dec, dec_in);
    dec->add_option("--report", dec_report, "JSON decomposition report");

    // synth
    auto* syn = app.add_subcommand("synth", "Generate a synthetic instance");
    std::string syn_model = "ba", syn_prefix = "instance";
    int syn_p = 100, syn_ba_order = 1, syn_blocks = 10, syn_cluster_size = 0, syn_n = 0;
    double syn_within = 0.3, syn_between = 0.005, syn_alpha = 0.5, syn_chi = 0.1, syn_eps = 1e-3;
    std::uint64_t syn_seed = 0;
    syn->add_option("--model", syn_model, "Graph model")
        ->check(CLI::IsMember({"ba", "sbm", "chain"}))
        ->capture_default_str();
    syn->add_option("--p", syn_p, "Vertex count (ba, sbm)")->capture_default_str();
    syn->add_option("--ba-order", syn_ba_order, "Edges per new vertex (ba)")
        ->capture_default_str();
    syn->add_option("--blocks", syn_blocks, "Block count (sbm, chain)")->capture_default_str();
    syn->add_option("--within", syn_within, "Within-block edge probability (sbm)")
        ->capture_default_str();
    syn->add_option("--between", syn_between, "Between-block edge probability (sbm)")
        ->capture_default_str();
    syn->add_option("--cluster-size", syn_cluster_size, "Vertices per block (chain)");
    syn->add_option("--alpha", syn_alpha, "Support-matching blend weight (chain)")
        ->capture_default_str();
    syn->add_option("--seed", syn_seed, "Random seed")->capture_default_str();
    syn->add_option("--n", syn_n, "Sample count (0 = 10*p)")->capture_default_str();
    syn->add_option("--chi", syn_chi, "Regularizer sparsity level")->capture_default_str();
    syn->add_option("--eps", syn_eps, "Regularizer epsilon")->capture_default_str();
    syn->add_option("--out-prefix", syn_prefix, "Output file prefix")->capture_default_str();

    // bench
    auto* ben = app.add_subcommand("bench", "RE-vs-time traces and ratio-of-improvement grids");
    MatrixInputs ben_in;
    ben_in.chi = 0.1;  // default for generated instances; files may override via --lambda
    SolverFlags ben_flags;
    std::string ben_model = "ba", ben_prefix = "bench";
    int ben_p = 500, ben_ba_order = 1, ben_blocks = 10, ben_trials = 5;
    double ben_within = 0.3, ben_between = 0.005, ben_alpha = 0.5;
    double ben_target = 1e-6, ben_budget = 300.0;
    std::uint64_t ben_seed = 0;
    std::vector<int> ben_grid_k, ben_grid_size;
    add_matrix_inputs(ben, ben_in);
    add_solver_flags(ben, ben_flags);
    ben->add_option("--model", ben_model, "Generator for the trace instance")
        ->check(CLI::IsMember({"ba", "sbm"}))
        ->capture_default_str();
    ben->add_option("--p", ben_p, "Vertex count for the generated instance")
        ->capture_default_str();
    ben->add_option("--ba-order", ben_ba_order, "Edges per new vertex (ba)")
        ->capture_default_str();
    ben->add_option("--blocks", ben_blocks, "Block count (sbm)")->capture_default_str();
    ben->add_option("--within", ben_within, "Within-block probability (sbm)")
        ->capture_default_str();
    ben->add_option("--between", ben_between, "Between-block probability (sbm)")
        ->capture_default_str();
    ben->add_option("--seed", ben_seed, "Random seed")->capture_default_str();
    ben->add_option("--target-re", ben_target, "Relative error target")->capture_default_str();
    ben->add_option("--budget", ben_budget, "Per-run time budget in seconds")
        ->capture_default_str();
    ben->add_option("--grid-k", ben_grid_k, "Cluster counts for the ratio grid")->delimiter(',');
    ben->add_option("--grid-size", ben_grid_size, "Cluster sizes for the ratio grid")
        ->delimiter(',');
    ben->add_option("--trials", ben_trials, "Trials per grid cell")->capture_default_str();
    ben->add_option("--alpha", ben_alpha, "Support-matching blend weight (grid)")
        ->capture_default_str();
    ben->add_option("--out-prefix", ben_prefix, "Output file prefix")->capture_default_str();

    // verify
    auto* ver = app.add_subcommand("verify", "Certify an estimate against its inputs");
    MatrixInputs ver_in;
    std::string ver_theta;
    double ver_tol = 1e-6;
    bool ver_with_r = false;
    add_matrix_inputs(ver, ver_in);
    ver->add_option("--theta", ver_theta, "Estimated precision matrix")->required();
    ver->add_option("--tol", ver_tol, "KKT residual tolerance")->capture_default_str();
    ver->add_flag("--with-r", ver_with_r, "Also build the explicit inverse and check Theta*R = I");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitFormat;
    }

    try {
        if (est->parsed())
            return run_estimate(est_in, est_flags, no_decompose, est_partition, est_out,
                                est_report, est_trace, est_reference);
        if (dec->parsed()) return run_decompose(dec_in, dec_report);
        if (syn->parsed())
            return run_synth(syn_model, syn_p, syn_ba_order, syn_blocks, syn_within, syn_between,
                             syn_cluster_size, syn_alpha, syn_seed, syn_n, syn_chi, syn_eps,
                             syn_prefix);
        if (ben->parsed()) {
            if (!ben_grid_k.empty()) {
                if (ben_grid_size.empty()) ben_grid_size.push_back(32);
                return run_bench_grid(ben_grid_k, ben_grid_size, ben_trials, ben_flags,
                                      ben_target, ben_budget, ben_in.chi, ben_in.eps, ben_alpha,
                                      ben_seed, ben_prefix);
            }
            mtp2::SymmetricMatrix s, lam;
            if (!ben_in.cov_path.empty() || !ben_in.data_path.empty()) {
                s = load_covariance(ben_in);
                lam = load_lambda(ben_in, s);
            } else {
                mtp2::GeneratorConfig cfg;
                cfg.p = ben_p;
                cfg.model = ben_model == "sbm" ? mtp2::GraphModel::SBM : mtp2::GraphModel::BA;
                cfg.ba_order = ben_ba_order;
                cfg.sbm_blocks = ben_blocks;
                cfg.sbm_within = ben_within;
                cfg.sbm_between = ben_between;
                cfg.seed = ben_seed;
                cfg.chi = ben_in.chi;
                cfg.eps = ben_in.eps;
                const auto inst = mtp2::make_instance(cfg);
                s = inst.s;
                lam = inst.lam;
            }
            return run_bench_traces(s, lam, ben_flags, ben_target, ben_budget, ben_prefix);
        }
        if (ver->parsed()) return run_verify(ver_theta, ver_in, ver_tol, ver_with_r);
    } catch (const mtp2::AssumptionViolated& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitAssumption;
    } catch (const mtp2::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFormat;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return kExitOk;
}
