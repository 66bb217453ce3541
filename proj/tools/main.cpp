// m3a: query-log IAT modeling and anomaly detection.
//
// Subcommands: ingest, fit, gof, detect, simulate. All randomness flows from
// --seed (or the config file); reruns with identical inputs are byte-identical.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "m3a/anomaly.hpp"
#include "m3a/config.hpp"
#include "m3a/errors.hpp"
#include "m3a/gof.hpp"
#include "m3a/ingest.hpp"
#include "m3a/io.hpp"
#include "m3a/metamodel.hpp"
#include "m3a/mixtures.hpp"
#include "m3a/rng.hpp"

namespace {

using nlohmann::json;

constexpr const char* kToolVersion = "m3a 0.1.0";

// stage-scoped, per-user seed stream
std::uint64_t stage_seed(std::uint64_t master, std::string_view stage, std::string_view user) {
    return m3a::derive_seed(m3a::derive_seed(master, stage), user);
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const auto n_workers =
        std::min<std::size_t>(std::max(threads, 1), n == 0 ? 1 : n);
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    };
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
}

std::filesystem::path prepare_out_dir(const m3a::RunConfig& cfg) {
    std::filesystem::path dir(cfg.out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw m3a::DomainError("cannot create output directory: " + cfg.out_dir);
    return dir;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw m3a::DomainError("cannot open output file: " + path.string());
    out << text;
}

json config_echo(const m3a::RunConfig& cfg) { return json::parse(m3a::config_to_json(cfg)); }

std::string sanitize_id(const std::string& id) {
    std::string out;
    for (const char c : id) {
        const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') ||
                        (c >= 'A' && c <= 'Z') || c == '_' || c == '-';
        out += ok ? c : '_';
    }
    return out;
}

// ---- ingest ------------------------------------------------------------------

int cmd_ingest(const m3a::RunConfig& cfg, const std::string& log_path,
               const std::vector<std::string>& histogram_users) {
    const auto dir = prepare_out_dir(cfg);
    const auto parsed = m3a::read_log_file(log_path);
    const auto series = m3a::extract_iats(parsed.events, cfg.landed_only);

    std::size_t n_landed = 0, n_zero = 0, n_iats = 0;
    std::vector<double> pooled;
    for (const auto& s : series) {
        n_landed += s.n_landed;
        n_zero += s.n_zero_iats;
        n_iats += s.iats.size();
        pooled.insert(pooled.end(), s.iats.begin(), s.iats.end());
    }

    m3a::write_iats_csv((dir / "iats.csv").string(), series);
    m3a::write_summary_csv((dir / "summary.csv").string(), series);
    m3a::write_histogram_csv((dir / "histogram.csv").string(),
                             m3a::log_histogram(pooled, cfg.bins_per_decade));
    for (const auto& id : histogram_users) {
        const auto hit = std::find_if(series.begin(), series.end(),
                                      [&](const m3a::IatSeries& s) { return s.user_id == id; });
        if (hit == series.end()) throw m3a::DomainError("no such user in log: " + id);
        m3a::write_histogram_csv((dir / ("histogram_" + sanitize_id(id) + ".csv")).string(),
                                 m3a::log_histogram(hit->iats, cfg.bins_per_decade));
    }

    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = "ingest";
    manifest["input"] = log_path;
    manifest["config"] = config_echo(cfg);
    manifest["totals"] = {{"users", series.size()},
                          {"queries", parsed.events.size()},
                          {"landed", n_landed},
                          {"orphan", parsed.events.size() - n_landed},
                          {"zero_iats", n_zero},
                          {"iats", n_iats},
                          {"lines", parsed.stats.n_lines},
                          {"skipped_lines", parsed.stats.n_skipped}};
    write_text(dir / "ingest_manifest.json", manifest.dump(2) + "\n");

    std::cout << "users: " << series.size() << "\n"
              << "queries: " << parsed.events.size() << "\n"
              << "landed: " << n_landed << "\n"
              << "orphan: " << parsed.events.size() - n_landed << "\n"
              << "zero_iats: " << n_zero << "\n"
              << "skipped_lines: " << parsed.stats.n_skipped << "\n";
    return 0;
}

// ---- fit ---------------------------------------------------------------------

int cmd_fit(const m3a::RunConfig& cfg, const std::string& iat_path) {
    const auto dir = prepare_out_dir(cfg);
    const auto series = m3a::read_iats_csv(iat_path);

    std::vector<m3a::UserFitRow> rows(series.size());
    parallel_for(series.size(), cfg.threads, [&](std::size_t i) {
        auto& row = rows[i];
        row.user_id = series[i].user_id;
        m3a::EmConfig em = cfg.em;
        em.seed = m3a::derive_seed(cfg.seed, series[i].user_id);
        try {
            row.report = m3a::camellog_fit_em(series[i].iats, em);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    m3a::write_params_csv((dir / "params.csv").string(), rows);

    json reports = json::array();
    std::size_t n_ok = 0, n_failed = 0;
    for (const auto& row : rows) {
        json r;
        r["user_id"] = row.user_id;
        if (row.error.empty()) {
            ++n_ok;
            const auto& p = row.report.params;
            r["params"] = {{"theta", p.theta},
                           {"alpha_in", p.in_component.alpha},
                           {"beta_in", p.in_component.beta},
                           {"alpha_off", p.off_component.alpha},
                           {"beta_off", p.off_component.beta}};
            r["train_loglik"] = row.report.train_loglik;
            r["n_iterations"] = row.report.n_iterations;
            r["converged"] = row.report.converged;
            r["collapsed"] = row.report.collapsed;
            r["n_params"] = row.report.n_params;
            r["loglik_trace"] = row.report.loglik_trace;
        } else {
            ++n_failed;
            r["error"] = row.error;
        }
        reports.push_back(std::move(r));
    }

    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = "fit";
    manifest["input"] = iat_path;
    manifest["config"] = config_echo(cfg);
    manifest["totals"] = {{"users", rows.size()}, {"fitted", n_ok}, {"failed", n_failed}};
    manifest["reports"] = std::move(reports);
    write_text(dir / "fit_manifest.json", manifest.dump(2) + "\n");

    std::cout << "users: " << rows.size() << "\n"
              << "fitted: " << n_ok << "\n"
              << "failed: " << n_failed << "\n";
    return 0;
}

// ---- gof ---------------------------------------------------------------------

int cmd_gof(const m3a::RunConfig& cfg, const std::string& iat_path, const std::string& qq_user,
            bool qq_sampled) {
    const auto dir = prepare_out_dir(cfg);
    const auto series = m3a::read_iats_csv(iat_path);

    const std::array<const char*, 3> model_names = {"camel_log", "exp_mixture",
                                                    "pareto_mixture"};
    std::vector<std::vector<m3a::UserGofRow>> per_user(series.size());
    parallel_for(series.size(), cfg.threads, [&](std::size_t i) {
        const auto& s = series[i];
        m3a::GofConfig g = m3a::to_gof_config(cfg);
        g.em.seed = m3a::derive_seed(cfg.seed, s.user_id);
        auto& rows = per_user[i];
        try {
            const auto scores =
                m3a::evaluate_models(s.iats, stage_seed(cfg.seed, "split", s.user_id), g);
            for (const auto& score : scores) rows.push_back({s.user_id, score});
        } catch (const std::exception& e) {
            for (const char* name : model_names) {
                m3a::GofScore sc;
                sc.model_name = name;
                sc.error = e.what();
                rows.push_back({s.user_id, sc});
            }
        }
    });

    std::vector<m3a::UserGofRow> rows;
    for (auto& r : per_user) rows.insert(rows.end(), r.begin(), r.end());
    m3a::write_gof_csv((dir / "gof.csv").string(), rows);

    // Table-2-style win rates of camel_log against each alternative, over the
    // users where both models were scored.
    std::size_t pareto_n = 0, pareto_loglik_wins = 0, pareto_bic_wins = 0;
    std::size_t exp_n = 0, exp_loglik_wins = 0, exp_bic_wins = 0;
    for (std::size_t i = 0; i + 2 < rows.size(); i += 3) {
        const auto& camel = rows[i].score;
        const auto& expm = rows[i + 1].score;
        const auto& pareto = rows[i + 2].score;
        if (camel.error.empty() && pareto.error.empty()) {
            ++pareto_n;
            if (camel.test_loglik > pareto.test_loglik) ++pareto_loglik_wins;
            if (camel.bic < pareto.bic) ++pareto_bic_wins;
        }
        if (camel.error.empty() && expm.error.empty()) {
            ++exp_n;
            if (camel.test_loglik > expm.test_loglik) ++exp_loglik_wins;
            if (camel.bic < expm.bic) ++exp_bic_wins;
        }
    }
    json winrates;
    winrates["camel_vs_pareto"] = {{"n", pareto_n},
                                   {"test_loglik_wins", pareto_loglik_wins},
                                   {"bic_wins", pareto_bic_wins}};
    winrates["camel_vs_exp"] = {{"n", exp_n},
                                {"test_loglik_wins", exp_loglik_wins},
                                {"bic_wins", exp_bic_wins}};
    write_text(dir / "winrates.json", winrates.dump(2) + "\n");

    if (!qq_user.empty()) {
        const auto hit =
            std::find_if(series.begin(), series.end(),
                         [&](const m3a::IatSeries& s) { return s.user_id == qq_user; });
        if (hit == series.end()) throw m3a::DomainError("no such user in IAT file: " + qq_user);
        m3a::EmConfig em = cfg.em;
        em.seed = m3a::derive_seed(cfg.seed, qq_user);
        const auto report = m3a::camellog_fit_em(hit->iats, em);
        std::vector<std::pair<double, double>> points;
        if (qq_sampled) {
            // literal reproduction mode: model side from a same-size sample
            std::vector<double> data(hit->iats.begin(), hit->iats.end());
            std::sort(data.begin(), data.end());
            auto sim = m3a::camellog_sample(data.size(), report.params,
                                            stage_seed(cfg.seed, "qq", qq_user));
            std::sort(sim.begin(), sim.end());
            points.reserve(data.size());
            for (std::size_t i = 0; i < data.size(); ++i) points.emplace_back(data[i], sim[i]);
        } else {
            points = m3a::qq_points(hit->iats, [&](double u) {
                return m3a::camellog_quantile(u, report.params);
            });
        }
        m3a::write_qq_csv((dir / "qq.csv").string(), qq_user, points);
    }

    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = "gof";
    manifest["input"] = iat_path;
    manifest["config"] = config_echo(cfg);
    manifest["totals"] = {{"users", series.size()}};
    manifest["winrates"] = std::move(winrates);
    write_text(dir / "gof_manifest.json", manifest.dump(2) + "\n");

    std::cout << "users: " << series.size() << "\n"
              << "camel_vs_pareto_loglik_wins: " << pareto_loglik_wins << "/" << pareto_n
              << "\n"
              << "camel_vs_exp_loglik_wins: " << exp_loglik_wins << "/" << exp_n << "\n";
    return 0;
}

// ---- detect ------------------------------------------------------------------

int cmd_detect(const m3a::RunConfig& cfg, const std::string& log_path,
               const std::string& iat_path) {
    const auto dir = prepare_out_dir(cfg);
    std::vector<m3a::IatSeries> series;
    std::string input;
    if (!log_path.empty()) {
        input = log_path;
        const auto parsed = m3a::read_log_file(log_path);
        series = m3a::extract_iats(parsed.events, cfg.landed_only);
    } else {
        // IAT files carry no query totals, so the orphan/max-IAT screens
        // cannot fire in this mode; use --log for full screening.
        input = iat_path;
        series = m3a::read_iats_csv(iat_path);
    }

    const auto report = m3a::run_m3a_on_series(series, m3a::to_anomaly_config(cfg));
    m3a::write_report_csv((dir / "report.csv").string(), report);
    m3a::write_reference_csv((dir / "reference.csv").string(), report);

    json reasons = json::object();
    for (const auto& rec : report.auto_outliers) {
        const auto key = rec.auto_outlier_reason;
        reasons[key] = reasons.contains(key) ? reasons[key].get<std::size_t>() + 1 : 1;
    }

    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = "detect";
    manifest["input"] = input;
    manifest["config"] = config_echo(cfg);
    manifest["metaclick"] = {{"eta", report.params.eta},
                             {"tau", report.tau},
                             {"r_marginal",
                              {{"alpha", report.params.r_marginal.alpha},
                               {"beta", report.params.r_marginal.beta}}},
                             {"m_marginal",
                              {{"alpha", report.params.m_marginal.alpha},
                               {"beta", report.params.m_marginal.beta}}}};
    manifest["reference_seed"] = report.reference_seed;
    manifest["threshold"] = report.threshold;
    manifest["totals"] = {{"scored", report.scored.size()},
                          {"auto_outliers", report.auto_outliers.size()},
                          {"flagged", report.flagged.size()}};
    manifest["auto_outlier_reasons"] = std::move(reasons);
    manifest["flagged"] = report.flagged;
    write_text(dir / "detect_manifest.json", manifest.dump(2) + "\n");

    std::cout << "scored: " << report.scored.size() << "\n"
              << "auto_outliers: " << report.auto_outliers.size() << "\n"
              << "flagged: " << report.flagged.size() << "\n";
    return 0;
}

// ---- simulate ----------------------------------------------------------------

struct SimulateParams {
    m3a::MetaClickParams meta;
    double beta_in = 2.0;
    double alpha_off = 25200.0;
    double beta_off = 2.0;
    std::int64_t start_timestamp = 1136073600;  // 2006-01-01 00:00:00
};

SimulateParams load_simulate_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw m3a::ConfigError("cannot open params file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::exception& e) {
        throw m3a::ConfigError(std::string("params file is not valid JSON: ") + e.what());
    }

    SimulateParams p;
    std::vector<std::string> violations;
    const auto need_positive = [&](const char* key, double v) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            violations.push_back(std::string(key) + ": must be positive and finite");
        }
    };
    try {
        p.meta.eta = root.value("eta", 1.0);
        const auto marginal = [&](const char* key) {
            double alpha = root[key].value("alpha", 1.0);
            double beta = root[key].value("beta", 1.0);
            need_positive((std::string(key) + ".alpha").c_str(), alpha);
            need_positive((std::string(key) + ".beta").c_str(), beta);
            return (alpha > 0.0 && beta > 0.0 && std::isfinite(alpha) && std::isfinite(beta))
                       ? m3a::LogLogisticParams(alpha, beta)
                       : m3a::LogLogisticParams();
        };
        if (root.contains("r_marginal")) p.meta.r_marginal = marginal("r_marginal");
        if (root.contains("m_marginal")) p.meta.m_marginal = marginal("m_marginal");
        p.beta_in = root.value("beta_in", 2.0);
        p.alpha_off = root.value("alpha_off", 25200.0);
        p.beta_off = root.value("beta_off", 2.0);
        p.start_timestamp = root.value("start_timestamp", std::int64_t{1136073600});
    } catch (const json::exception& e) {
        throw m3a::ConfigError(std::string("bad params file: ") + e.what());
    }
    if (!(p.meta.eta >= 1.0) || !std::isfinite(p.meta.eta)) {
        violations.emplace_back("eta: must be finite and >= 1");
    }
    need_positive("beta_in", p.beta_in);
    need_positive("alpha_off", p.alpha_off);
    need_positive("beta_off", p.beta_off);
    if (p.start_timestamp < 0) violations.emplace_back("start_timestamp: must be >= 0");
    if (!violations.empty()) {
        std::string msg = "invalid simulation params:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw m3a::ConfigError(msg);
    }
    return p;
}

int cmd_simulate(const m3a::RunConfig& cfg, const std::string& params_path,
                 std::size_t n_users, std::size_t n_iats) {
    if (n_users < 1) throw m3a::ConfigError("--users must be >= 1");
    if (n_iats < 1) throw m3a::ConfigError("--iats must be >= 1");
    const auto dir = prepare_out_dir(cfg);
    const SimulateParams p = load_simulate_params(params_path);

    const auto features =
        m3a::metaclick_sample(n_users, p.meta, m3a::derive_seed(cfg.seed, "features"));

    int width = 1;
    for (std::size_t v = n_users; v >= 10; v /= 10) ++width;

    std::vector<m3a::QueryEvent> events;
    events.reserve(n_users * (n_iats + 1));
    for (std::size_t i = 0; i < n_users; ++i) {
        std::string id = std::to_string(i + 1);
        id.insert(0, static_cast<std::size_t>(width) - id.size(), '0');
        id.insert(0, "u");

        const double theta = features[i].r / (1.0 + features[i].r);
        const m3a::CamelLogParams user_params{
            theta, m3a::LogLogisticParams(std::exp(features[i].m), p.beta_in),
            m3a::LogLogisticParams(p.alpha_off, p.beta_off)};
        const auto iats =
            m3a::camellog_sample(n_iats, user_params, m3a::derive_seed(cfg.seed, id));

        std::int64_t ts = p.start_timestamp;
        events.push_back({id, ts, true});
        for (const double iat : iats) {
            // 1 s log resolution: round, but never collapse onto the same second
            ts += std::max<std::int64_t>(1, std::llround(iat));
            events.push_back({id, ts, true});
        }
    }

    m3a::write_minimal_log((dir / "synthetic.tsv").string(), events);

    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = "simulate";
    manifest["input"] = params_path;
    manifest["config"] = config_echo(cfg);
    manifest["params"] = {{"eta", p.meta.eta},
                          {"r_marginal",
                           {{"alpha", p.meta.r_marginal.alpha},
                            {"beta", p.meta.r_marginal.beta}}},
                          {"m_marginal",
                           {{"alpha", p.meta.m_marginal.alpha},
                            {"beta", p.meta.m_marginal.beta}}},
                          {"beta_in", p.beta_in},
                          {"alpha_off", p.alpha_off},
                          {"beta_off", p.beta_off},
                          {"start_timestamp", p.start_timestamp}};
    manifest["totals"] = {{"users", n_users}, {"iats_per_user", n_iats},
                          {"events", events.size()}};
    write_text(dir / "simulate_manifest.json", manifest.dump(2) + "\n");

    std::cout << "users: " << n_users << "\n"
              << "events: " << events.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"M3A: query-log IAT modeling and anomaly detection"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    int threads = 0;
    app.add_option("--config", config_path, "JSON config file");
    auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides config)");
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides config)");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads (overrides config)");

    auto* ingest = app.add_subcommand("ingest", "parse a query log into IATs and summaries");
    std::string log_path;
    std::vector<std::string> histogram_users;
    ingest->add_option("log", log_path, "query log (click-log or minimal TSV; .gz ok)")
        ->required();
    ingest->add_option("--histogram-user", histogram_users,
                       "also write a per-user histogram (repeatable)");
    bool all_queries = false;
    ingest->add_flag("--all-queries", all_queries,
                     "difference all queries, not just landed ones");

    auto* fit = app.add_subcommand("fit", "per-user Camel-Log EM fits");
    std::string fit_iats;
    fit->add_option("iats", fit_iats, "iats.csv from ingest")->required();

    auto* gof = app.add_subcommand("gof", "model comparison on train/test splits");
    std::string gof_iats, qq_user;
    bool qq_sampled = false;
    gof->add_option("iats", gof_iats, "iats.csv from ingest")->required();
    gof->add_option("--qq-user", qq_user, "write qq.csv for this user");
    gof->add_flag("--qq-sampled", qq_sampled,
                  "qq model side from a same-size sample instead of analytic quantiles");

    auto* detect = app.add_subcommand("detect", "end-to-end anomaly pipeline");
    std::string detect_log, detect_iats;
    auto* dlog = detect->add_option("--log", detect_log, "raw query log input");
    auto* diat = detect->add_option("--iats", detect_iats, "pre-extracted iats.csv input");
    dlog->excludes(diat);

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic minimal log");
    std::string params_path;
    std::size_t n_users = 100, n_iats = 500;
    simulate->add_option("params", params_path, "model params JSON")->required();
    simulate->add_option("--users", n_users, "number of users");
    simulate->add_option("--iats", n_iats, "IATs per user");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        m3a::RunConfig cfg =
            config_path.empty() ? m3a::RunConfig{} : m3a::load_config(config_path);
        if (seed_opt->count() > 0) cfg.seed = seed;
        if (out_opt->count() > 0) cfg.out_dir = out_dir;
        if (threads_opt->count() > 0) cfg.threads = threads;
        if (cfg.threads < 1) throw m3a::ConfigError("threads: must be >= 1");

        if (ingest->parsed()) {
            if (all_queries) cfg.landed_only = false;
            return cmd_ingest(cfg, log_path, histogram_users);
        }
        if (fit->parsed()) return cmd_fit(cfg, fit_iats);
        if (gof->parsed()) return cmd_gof(cfg, gof_iats, qq_user, qq_sampled);
        if (detect->parsed()) {
            if (detect_log.empty() && detect_iats.empty()) {
                throw m3a::ConfigError("detect requires --log or --iats");
            }
            return cmd_detect(cfg, detect_log, detect_iats);
        }
        if (simulate->parsed()) return cmd_simulate(cfg, params_path, n_users, n_iats);
        throw m3a::ConfigError("no subcommand given");
    } catch (const m3a::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const m3a::FitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const m3a::DegenerateDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const m3a::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const m3a::DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
