// polydp: differentially private release of k-way marginals over a
// low-weight polynomial representation, plus the companion construction
// and certification tools.

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polydp/database.hpp"
#include "polydp/dual_witness.hpp"
#include "polydp/or_approx.hpp"
#include "polydp/query_io.hpp"
#include "polydp/release.hpp"

using json = nlohmann::ordered_json;
using namespace polydp;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kSchema = "polydp-report-v1";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitContract = 3;

Database load_db(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open database file: " + path);
    return Database::load_csv(in);
}

std::ostream& open_sink(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty() || path == "-") return fallback;
    file.open(path);
    if (!file) throw parse_error("cannot open output file: " + path);
    return file;
}

AmplifierKind parse_amplifier(const std::string& name, int k) {
    if (name == "chebyshev") return AmplifierKind::chebyshev;
    if (name == "interpolation") return AmplifierKind::interpolation;
    return k <= 8 ? AmplifierKind::interpolation : AmplifierKind::chebyshev;
}

json noise_json(const NoiseScales& s) {
    return json{{"sigma_threshold", s.threshold},
                {"sigma_compare", s.compare},
                {"sigma_answer", s.answer},
                {"eps_svt_per_event", s.eps_svt_event},
                {"eps_answer_per_event", s.eps_answer_event},
                {"effective_c_T", s.effective_c_t}};
}

json run_report(const MechanismState& state, std::uint64_t ell_for_bound) {
    const SizeCheck check = state.size_check(ell_for_bound);
    return json{{"schema", kSchema},
                {"n", state.n()},
                {"d", state.d_original()},
                {"extended_dims", state.dims()},
                {"k", state.options().k},
                {"block_count", state.block_count()},
                {"degree", state.degree()},
                {"poly_weight", state.poly_weight()},
                {"poly_weight_realized", state.expansion_realized()},
                {"W", state.W()},
                {"vector_length", state.idc().pbar.v.size()},
                {"alpha", state.params().alpha},
                {"epsilon", state.params().epsilon},
                {"delta", state.params().delta},
                {"beta", state.params().beta},
                {"ell", ell_for_bound},
                {"threshold_T", state.threshold()},
                {"noise_off", state.options().noise_off},
                {"noise", noise_json(state.noise())},
                {"B_theory", state.theory_bound()},
                {"B", state.budget()},
                {"mistakes_used", state.mistakes()},
                {"budget_exhausted", state.budget_exhausted()},
                {"answer_contract_violations", state.contract_violations()},
                {"required_n", check.required_n},
                {"meets_required_n", check.ok},
                {"max_internal_error_estimate", state.max_internal_error()},
                {"seed", state.options().seed}};
}

struct MechanismFlags {
    std::string db_path;
    int k = 2;
    double eps = 1.0, delta = 1e-6, alpha = 0.05, beta = 0.01;
    std::uint64_t ell = 0;
    std::uint64_t seed = 0;
    std::uint64_t budget = 0;
    double wmax = 1000.0;
    std::string amplifier = "auto";
    bool noise_off = false;
    bool force = false;
};

void add_mechanism_flags(CLI::App* cmd, MechanismFlags& f, bool with_ell) {
    cmd->add_option("--db", f.db_path, "database CSV path")->required();
    cmd->add_option("--k", f.k, "maximum marginal arity")->required();
    cmd->add_option("--eps", f.eps, "privacy epsilon");
    cmd->add_option("--delta", f.delta, "privacy delta");
    cmd->add_option("--alpha", f.alpha, "target accuracy");
    cmd->add_option("--beta", f.beta, "failure probability");
    if (with_ell) cmd->add_option("--ell", f.ell, "query budget (0 = unlimited)");
    cmd->add_option("--seed", f.seed, "rng seed");
    cmd->add_option("--budget", f.budget, "above-threshold event budget (0 = theoretical bound)");
    cmd->add_option("--wmax", f.wmax, "weight cap for the block-count scan");
    cmd->add_option("--amplifier", f.amplifier, "auto|chebyshev|interpolation")
        ->check(CLI::IsMember({"auto", "chebyshev", "interpolation"}));
    cmd->add_flag("--noise-off", f.noise_off, "testing mode: exact IDC, no noise");
    cmd->add_flag("--force", f.force, "run even when n is below the accuracy requirement");
}

MechanismState make_state(const Database& db, const MechanismFlags& f) {
    PrivacyParams params;
    params.epsilon = f.eps;
    params.delta = f.delta;
    params.alpha = f.alpha;
    params.beta = f.beta;
    params.ell = f.ell;
    ReleaseOptions opt;
    opt.k = f.k;
    opt.weight_cap = f.wmax;
    opt.mistake_budget = f.budget;
    opt.noise_off = f.noise_off;
    opt.seed = f.seed;
    if (f.amplifier != "auto") opt.amplifier = parse_amplifier(f.amplifier, f.k);
    return MechanismState(db, params, opt);
}

void enforce_size_precondition(const MechanismState& state, std::uint64_t ell, bool force) {
    if (state.options().noise_off) return;
    const SizeCheck check = state.size_check(ell);
    if (!check.ok && !force)
        throw std::invalid_argument(
            "database size n = " + std::to_string(state.n()) +
            " is below the accuracy requirement n >= " + std::to_string(check.required_n) +
            "; pass --force to run without the guarantee");
}

// ---------------------------------------------------------------- commands

int cmd_ingest_check(const std::string& db_path, const std::string& queries_path) {
    Database db = load_db(db_path);
    json report{{"schema", kSchema},
                {"n", db.n()},
                {"d", db.d()},
                {"columns", db.column_names()}};
    if (!queries_path.empty()) {
        std::ifstream qs(queries_path);
        if (!qs) throw parse_error("cannot open queries file: " + queries_path);
        QuerySequence seq = load_queries_jsonl(qs, db.column_names());
        report["queries"] = seq.size();
        report["max_arity"] = seq.max_arity;
    }
    std::cout << report.dump() << '\n';
    return kExitOk;
}

int cmd_build_approx(int d, int k, double gamma, int m, double wmax, const std::string& amplifier,
                     const std::string& mode, bool do_expand, std::uint64_t term_cap, int threads) {
    const ApproxMode approx_mode = mode == "global" ? ApproxMode::global : ApproxMode::restricted;
    if (m == 0) m = choose_block_count(d, k, gamma, approx_mode, wmax);

    ApproxSpec spec = approx_mode == ApproxMode::global
                          ? build_global_approx(d, m, gamma)
                          : build_restricted_approx(d, k, m, gamma, parse_amplifier(amplifier, k));

    json report{{"schema", kSchema},
                {"d", d},
                {"k", k},
                {"m", m},
                {"gamma", gamma},
                {"mode", mode},
                {"amplifier", spec.amplifier_kind == AmplifierKind::chebyshev ? "chebyshev" : "interpolation"},
                {"amplifier_degree", spec.amplifier.degree()},
                {"degree", spec.degree_bound},
                {"weight_bound", spec.weight_bound}};

    std::optional<SparsePoly> expanded;
    if (do_expand) {
        expanded = expand(spec, term_cap);
        report["realized_weight"] = expanded->weight();
        report["realized_degree"] = expanded->degree();
        report["terms"] = expanded->term_count();
    }

    const int radius = approx_mode == ApproxMode::global ? d : k;
    BallReport ball = verify_on_ball(spec, radius, std::uint64_t{1} << 26, threads);
    report["max_error"] = ball.max_error;
    report["ball_points"] = ball.points;

    std::cout << report.dump() << '\n';
    if (expanded) expanded->to_text(std::cout);
    return kExitOk;
}

int cmd_release_offline(const MechanismFlags& flags, const std::string& out_path,
                        const std::string& report_path) {
    Database db = load_db(flags.db_path);
    MechanismState state = make_state(db, flags);
    const auto queries = enumerate_marginals(db.d(), flags.k);
    const std::uint64_t ell = flags.ell ? flags.ell : queries.size();
    enforce_size_precondition(state, ell, flags.force);

    std::ofstream out_file;
    std::ostream& out = open_sink(out_path, out_file, std::cout);
    for (const Query& q : queries) {
        AnswerRecord rec = state.answer_online(q);
        json line{{"id", rec.id}, {"answer", rec.answer}, {"mode", rec.noisy ? "noisy" : "guess"}};
        out << line.dump() << '\n';
    }

    std::ofstream report_file;
    std::ostream& rep = open_sink(report_path, report_file, std::cerr);
    rep << run_report(state, ell).dump() << '\n';
    return kExitOk;
}

int cmd_serve_online(const MechanismFlags& flags, const std::string& state_in,
                     const std::string& state_out) {
    Database db = load_db(flags.db_path);
    MechanismState state = make_state(db, flags);
    enforce_size_precondition(state, flags.ell ? flags.ell : 1000, flags.force);
    if (!state_in.empty()) {
        std::ifstream sf(state_in);
        if (!sf) throw parse_error("cannot open state file: " + state_in);
        state.adopt_idc(load_state(sf));
    }

    std::string line;
    while (std::getline(std::cin, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line);  // malformed input aborts the session
        Query q = parse_query_json(j, db.column_names());
        AnswerRecord rec = state.answer_online(q);
        json outline{{"id", rec.id}, {"answer", rec.answer}, {"mode", rec.noisy ? "noisy" : "guess"}};
        std::cout << outline.dump() << std::endl;  // flush per line
    }
    if (!state_out.empty()) {
        std::ofstream sf(state_out);
        if (!sf) throw parse_error("cannot open state file: " + state_out);
        save_state(sf, state.idc());
    }
    std::cerr << run_report(state, flags.ell ? flags.ell : state.queries_answered()).dump() << '\n';
    return kExitOk;
}

int cmd_summary(const MechanismFlags& flags, std::uint64_t samples, std::uint64_t max_passes) {
    Database db = load_db(flags.db_path);
    MechanismState state = make_state(db, flags);
    const auto queries = enumerate_marginals(db.d(), flags.k);
    enforce_size_precondition(state, queries.size(), flags.force);

    Summary summary = release_summary(state, flags.k, samples, flags.seed + 1, max_passes);
    summary.poly.to_text(std::cout);

    json report = run_report(state, queries.size());
    report["summary_samples"] = summary.sample_count;
    report["summary_terms"] = summary.poly.term_count();
    std::cerr << report.dump() << '\n';
    return kExitOk;
}

int cmd_certify_lb(int d, int k, double gamma, double W, int degree, int outer_degree) {
    if (k < 1 || d < 1 || d % k != 0)
        throw std::invalid_argument("certify-lb: k must divide d (blocks of size d/k)");
    const int d_inner = d / k;

    if (outer_degree == 0) outer_degree = outer_degree_scan(k, gamma);
    if (outer_degree == 0) throw std::invalid_argument("certify-lb: no outer witness exists at any degree");
    auto outer = solve_outer_witness(k, gamma, outer_degree);
    if (!outer)
        throw std::invalid_argument("certify-lb: outer witness infeasible at degree " +
                                    std::to_string(outer_degree));

    InnerWitness mu = build_inner_witness(d_inner);
    const int inner_degree = std::max(1, (2 * degree) / outer_degree);
    InnerCertificate inner = verify_inner_witness(mu, inner_degree);
    CombinedWitness psi = combine(*outer, mu, k);
    DualCertificate cert = certify_lower_bound(psi, gamma, W, degree);

    const double w_cutoff =
        gamma * std::ldexp(1.0, -k) * std::pow(inner.certified_weight, outer_degree / 2.0);

    json report{{"schema", kSchema},
                {"d", d},
                {"k", k},
                {"gamma", gamma},
                {"W", W},
                {"monomial_degree_checked", degree},
                {"outer_degree_D", outer_degree},
                {"inner_degree_t", inner_degree},
                {"inner_certified_weight", inner.certified_weight},
                {"conditions",
                 json{{"l1_norm", cert.l1},
                      {"correlation", cert.correlation},
                      {"worst_margin", cert.worst_margin},
                      {"margin_required", gamma}}},
                {"pass", cert.pass},
                {"certified_degree_lower_bound", cert.pass ? degree + 1 : 0},
                {"W_cutoff", w_cutoff},
                {"empirical_W_cutoff", cert.empirical_weight_cutoff},
                {"support_points", psi.points.size()},
                {"monomials_checked", cert.monomials_checked}};
    std::cout << report.dump() << '\n';
    return kExitOk;
}

int cmd_bench(const MechanismFlags& flags, std::uint64_t query_count, bool with_timings) {
    Database db = load_db(flags.db_path);
    auto t0 = std::chrono::steady_clock::now();
    MechanismState state = make_state(db, flags);
    auto t1 = std::chrono::steady_clock::now();

    auto queries = enumerate_marginals(db.d(), flags.k);
    if (query_count && query_count < queries.size()) queries.resize(query_count);

    double total_query_seconds = 0.0;
    for (const Query& q : queries) {
        auto q0 = std::chrono::steady_clock::now();
        state.answer_online(q);
        auto q1 = std::chrono::steady_clock::now();
        total_query_seconds += std::chrono::duration<double>(q1 - q0).count();
    }

    const double setup_seconds = std::chrono::duration<double>(t1 - t0).count();
    const double per_query = total_query_seconds / static_cast<double>(queries.size());

    json report{{"schema", kSchema},
                {"n", db.n()},
                {"d", db.d()},
                {"k", flags.k},
                {"degree", state.degree()},
                {"vector_length", state.idc().pbar.v.size()},
                {"queries", queries.size()},
                {"mistakes", state.mistakes()},
                {"seed", flags.seed}};
    if (with_timings) {
        report["setup_seconds"] = setup_seconds;
        report["per_query_seconds"] = per_query;
    }
    std::cout << report.dump() << '\n';
    std::cerr << "bench: setup " << setup_seconds << " s, " << queries.size() << " queries, "
              << per_query * 1e6 << " us/query, vector length "
              << state.idc().pbar.v.size() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentially private k-way marginal release over low-weight polynomials"};
    app.set_version_flag("--version", std::string("polydp ") + kVersion);
    app.set_config("--config");
    app.require_subcommand(0, 1);

    int threads = 1;
    app.add_option("--threads", threads, "worker threads for exhaustive scans");

    // ingest-check
    auto* ingest = app.add_subcommand("ingest-check", "validate a database CSV and query stream");
    std::string ingest_db, ingest_queries;
    ingest->add_option("--db", ingest_db, "database CSV path")->required();
    ingest->add_option("--queries", ingest_queries, "query JSONL path");

    // build-approx
    auto* build = app.add_subcommand("build-approx", "build and verify an OR approximation");
    int b_d = 0, b_k = 1, b_m = 0;
    double b_gamma = 1.0 / 400.0, b_wmax = 1000.0;
    std::string b_amplifier = "auto", b_mode = "restricted";
    bool b_expand = false;
    std::uint64_t b_term_cap = SparsePoly::kDefaultTermCap;
    build->add_option("--d", b_d, "dimension")->required();
    build->add_option("--k", b_k, "Hamming-ball radius")->required();
    build->add_option("--gamma", b_gamma, "target accuracy");
    build->add_option("--m", b_m, "block count (0 = choose automatically)");
    build->add_option("--wmax", b_wmax, "weight cap for the automatic block choice");
    build->add_option("--amplifier", b_amplifier, "auto|chebyshev|interpolation")
        ->check(CLI::IsMember({"auto", "chebyshev", "interpolation"}));
    build->add_option("--mode", b_mode, "restricted|global")
        ->check(CLI::IsMember({"restricted", "global"}));
    build->add_flag("--expand", b_expand, "expand and emit the polynomial text");
    build->add_option("--term-cap", b_term_cap, "expansion term budget");

    // release-offline
    auto* offline = app.add_subcommand("release-offline", "answer every k-way marginal");
    MechanismFlags offline_flags;
    std::string offline_out = "-", offline_report = "-";
    add_mechanism_flags(offline, offline_flags, true);
    offline->add_option("--out", offline_out, "answer JSONL sink ('-' = stdout)");
    offline->add_option("--report", offline_report, "run report sink ('-' = stderr)");

    // serve-online
    auto* serve = app.add_subcommand("serve-online", "answer queries from stdin (JSONL)");
    MechanismFlags serve_flags;
    std::string serve_state_in, serve_state_out;
    add_mechanism_flags(serve, serve_flags, true);
    serve->add_option("--state-in", serve_state_in, "resume from a saved simplex state");
    serve->add_option("--state-out", serve_state_out, "write the final simplex state to a file");

    // summary
    auto* summary = app.add_subcommand("summary", "converge and emit a compact summary polynomial");
    MechanismFlags summary_flags;
    std::uint64_t summary_samples = 1024, summary_max_passes = 0;
    add_mechanism_flags(summary, summary_flags, false);
    summary->add_option("--samples", summary_samples, "coefficient samples to draw");
    summary->add_option("--max-passes", summary_max_passes, "pass cap for convergence (0 = budget)");

    // certify-lb
    auto* certify = app.add_subcommand("certify-lb", "build and check a weight-degree lower-bound witness");
    int c_d = 9, c_k = 3, c_degree = 1, c_outer = 0;
    double c_gamma = 1.0 / 6.0, c_W = 0.0625;
    certify->add_option("--d", c_d, "composed dimension (k * d/k)")->required();
    certify->add_option("--k", c_k, "outer arity")->required();
    certify->add_option("--gamma", c_gamma, "approximation accuracy");
    certify->add_option("--W", c_W, "weight at which to certify");
    certify->add_option("--degree", c_degree, "monomial degree s to check (certifies s+1)");
    certify->add_option("--outer-degree", c_outer, "outer witness degree D (0 = scan)");

    // bench
    auto* bench = app.add_subcommand("bench", "time the per-query mechanism path");
    MechanismFlags bench_flags;
    std::uint64_t bench_queries = 0;
    bool bench_timings = false;
    add_mechanism_flags(bench, bench_flags, false);
    bench->add_option("--queries", bench_queries, "number of canonical queries (0 = all)");
    bench->add_flag("--with-timings", bench_timings, "include wall times in the JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*ingest) return cmd_ingest_check(ingest_db, ingest_queries);
        if (*build)
            return cmd_build_approx(b_d, b_k, b_gamma, b_m, b_wmax, b_amplifier, b_mode, b_expand,
                                    b_term_cap, threads);
        if (*offline) return cmd_release_offline(offline_flags, offline_out, offline_report);
        if (*serve) return cmd_serve_online(serve_flags, serve_state_in, serve_state_out);
        if (*summary) return cmd_summary(summary_flags, summary_samples, summary_max_passes);
        if (*certify) return cmd_certify_lb(c_d, c_k, c_gamma, c_W, c_degree, c_outer);
        if (*bench) return cmd_bench(bench_flags, bench_queries, bench_timings);
        std::cerr << app.help() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        auto kind = [&]() -> const char* {
            if (dynamic_cast<const parse_error*>(&e)) return "parse_error";
            if (dynamic_cast<const budget_exceeded*>(&e)) return "budget_exceeded";
            if (dynamic_cast<const weight_cap_exceeded*>(&e)) return "weight_cap_exceeded";
            if (dynamic_cast<const mistake_cap_exceeded*>(&e)) return "mistake_cap_exceeded";
            if (dynamic_cast<const query_budget_exhausted*>(&e)) return "query_budget_exhausted";
            if (dynamic_cast<const std::invalid_argument*>(&e)) return "contract_violation";
            return "error";
        };
        json err{{"error", e.what()}, {"type", kind()}};
        std::cerr << err.dump() << '\n';
        return kExitContract;
    }
}
