// Python bindings for the m3a core. Thin pass-through: same names, same
// exceptions (mapped to Python classes), no NumPy dependency.

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "m3a/anomaly.hpp"
#include "m3a/dists.hpp"
#include "m3a/errors.hpp"
#include "m3a/gof.hpp"
#include "m3a/ingest.hpp"
#include "m3a/metamodel.hpp"
#include "m3a/mixtures.hpp"
#include "m3a/rng.hpp"

namespace py = pybind11;

namespace {

m3a::EmConfig make_em_config(double tolerance, int max_iterations, int restarts,
                             std::size_t min_fit_size, std::uint64_t seed) {
    m3a::EmConfig cfg;
    cfg.tolerance = tolerance;
    cfg.max_iterations = max_iterations;
    cfg.restarts = restarts;
    cfg.min_fit_size = min_fit_size;
    cfg.seed = seed;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "query-log IAT modeling: mixtures, meta-click copula, anomaly scoring";

    py::register_exception<m3a::ConfigError>(m, "ConfigError");
    py::register_exception<m3a::FitError>(m, "FitError");
    py::register_exception<m3a::DegenerateDataError>(m, "DegenerateDataError");
    py::register_exception<m3a::InsufficientDataError>(m, "InsufficientDataError");
    py::register_exception<m3a::DomainError>(m, "DomainError", PyExc_ValueError);

    py::class_<m3a::LogLogisticParams>(m, "LogLogisticParams")
        .def(py::init<double, double>(), py::arg("alpha"), py::arg("beta"))
        .def_readonly("alpha", &m3a::LogLogisticParams::alpha)
        .def_readonly("beta", &m3a::LogLogisticParams::beta)
        .def("__repr__", [](const m3a::LogLogisticParams& p) {
            return "LogLogisticParams(alpha=" + std::to_string(p.alpha) +
                   ", beta=" + std::to_string(p.beta) + ")";
        });

    py::class_<m3a::CamelLogParams>(m, "CamelLogParams")
        .def(py::init([](double theta, const m3a::LogLogisticParams& in_c,
                         const m3a::LogLogisticParams& off_c) {
                 return m3a::CamelLogParams{theta, in_c, off_c};
             }),
             py::arg("theta"), py::arg("in_component"), py::arg("off_component"))
        .def_readonly("theta", &m3a::CamelLogParams::theta)
        .def_readonly("in_component", &m3a::CamelLogParams::in_component)
        .def_readonly("off_component", &m3a::CamelLogParams::off_component);

    py::class_<m3a::CamelLogFitReport>(m, "CamelLogFitReport")
        .def_readonly("params", &m3a::CamelLogFitReport::params)
        .def_readonly("train_loglik", &m3a::CamelLogFitReport::train_loglik)
        .def_readonly("n_iterations", &m3a::CamelLogFitReport::n_iterations)
        .def_readonly("converged", &m3a::CamelLogFitReport::converged)
        .def_readonly("collapsed", &m3a::CamelLogFitReport::collapsed)
        .def_readonly("n_params", &m3a::CamelLogFitReport::n_params)
        .def_readonly("loglik_trace", &m3a::CamelLogFitReport::loglik_trace);

    py::class_<m3a::KsResult>(m, "KsResult")
        .def_readonly("statistic", &m3a::KsResult::statistic)
        .def_readonly("p_value", &m3a::KsResult::p_value)
        .def_readonly("n_effective", &m3a::KsResult::n_effective);

    py::class_<m3a::GofScore>(m, "GofScore")
        .def_readonly("model_name", &m3a::GofScore::model_name)
        .def_readonly("test_loglik", &m3a::GofScore::test_loglik)
        .def_readonly("bic", &m3a::GofScore::bic)
        .def_readonly("ks", &m3a::GofScore::ks)
        .def_readonly("error", &m3a::GofScore::error);

    py::class_<m3a::MetaClickParams>(m, "MetaClickParams")
        .def(py::init([](double eta, const m3a::LogLogisticParams& r,
                         const m3a::LogLogisticParams& mm) {
                 return m3a::MetaClickParams{eta, r, mm};
             }),
             py::arg("eta"), py::arg("r_marginal"), py::arg("m_marginal"))
        .def_readonly("eta", &m3a::MetaClickParams::eta)
        .def_readonly("r_marginal", &m3a::MetaClickParams::r_marginal)
        .def_readonly("m_marginal", &m3a::MetaClickParams::m_marginal);

    py::class_<m3a::MetaClickFit>(m, "MetaClickFit")
        .def_readonly("params", &m3a::MetaClickFit::params)
        .def_readonly("tau", &m3a::MetaClickFit::tau)
        .def_readonly("n_users", &m3a::MetaClickFit::n_users)
        .def_readonly("negative_dependence", &m3a::MetaClickFit::negative_dependence);

    // ---- log-logistic ----------------------------------------------------
    m.def("ll_logpdf", &m3a::ll_logpdf, py::arg("t"), py::arg("params"));
    m.def("ll_pdf", &m3a::ll_pdf, py::arg("t"), py::arg("params"));
    m.def("ll_cdf", &m3a::ll_cdf, py::arg("t"), py::arg("params"));
    m.def("ll_quantile", &m3a::ll_quantile, py::arg("u"), py::arg("params"));
    m.def(
        "ll_fit_mle",
        [](const std::vector<double>& data, const std::vector<double>& weights) {
            if (weights.empty()) return m3a::ll_fit_mle(data);
            return m3a::ll_fit_mle(data, weights);
        },
        py::arg("data"), py::arg("weights") = std::vector<double>{});
    m.def(
        "ll_sample",
        [](std::size_t n, const m3a::LogLogisticParams& p, std::uint64_t seed) {
            return m3a::ll_sample(n, p, seed);
        },
        py::arg("n"), py::arg("params"), py::arg("seed"));

    // ---- Camel-Log mixture -------------------------------------------------
    m.def("camellog_logpdf", &m3a::camellog_logpdf, py::arg("t"), py::arg("params"));
    m.def("camellog_cdf", &m3a::camellog_cdf, py::arg("t"), py::arg("params"));
    m.def("camellog_quantile", &m3a::camellog_quantile, py::arg("u"), py::arg("params"));
    m.def(
        "camellog_sample",
        [](std::size_t n, const m3a::CamelLogParams& p, std::uint64_t seed) {
            return m3a::camellog_sample(n, p, seed);
        },
        py::arg("n"), py::arg("params"), py::arg("seed"));
    m.def(
        "camellog_fit_em",
        [](const std::vector<double>& data, double tolerance, int max_iterations, int restarts,
           std::size_t min_fit_size, std::uint64_t seed) {
            return m3a::camellog_fit_em(
                data, make_em_config(tolerance, max_iterations, restarts, min_fit_size, seed));
        },
        py::arg("data"), py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 500,
        py::arg("restarts") = 3, py::arg("min_fit_size") = 10, py::arg("seed") = 0);

    // ---- meta-click model ----------------------------------------------------
    m.def("gumbel_copula_cdf", &m3a::gumbel_copula_cdf, py::arg("u"), py::arg("v"),
          py::arg("eta"));
    m.def("gumbel_copula_logdensity", &m3a::gumbel_copula_logdensity, py::arg("u"),
          py::arg("v"), py::arg("eta"));
    m.def("kendall_tau",
          [](const std::vector<double>& x, const std::vector<double>& y) {
              return m3a::kendall_tau(x, y);
          });
    m.def(
        "fit_metaclick",
        [](const std::vector<std::pair<double, double>>& rm, std::size_t min_users) {
            std::vector<m3a::UserFeatures> features;
            features.reserve(rm.size());
            for (std::size_t i = 0; i < rm.size(); ++i) {
                features.push_back({"u" + std::to_string(i), rm[i].first, rm[i].second});
            }
            return m3a::fit_metaclick(features, min_users);
        },
        py::arg("rm_pairs"), py::arg("min_users") = 30);
    m.def(
        "metaclick_logpdf",
        [](double r, double mm, const m3a::MetaClickParams& p) {
            const auto s = m3a::metaclick_logpdf(r, mm, p);
            return py::make_tuple(s.value, s.clamped);
        },
        py::arg("r"), py::arg("m"), py::arg("params"),
        "returns (log_density, clamped)");
    m.def(
        "metaclick_sample",
        [](std::size_t n, const m3a::MetaClickParams& p, std::uint64_t seed) {
            const auto features = m3a::metaclick_sample(n, p, seed);
            std::vector<std::pair<double, double>> out;
            out.reserve(features.size());
            for (const auto& f : features) out.emplace_back(f.r, f.m);
            return out;
        },
        py::arg("n"), py::arg("params"), py::arg("seed"));

    // ---- goodness of fit ------------------------------------------------------
    m.def("kolmogorov_pvalue", &m3a::kolmogorov_pvalue, py::arg("lambda_"));
    m.def(
        "ks_one_sample",
        [](const std::vector<double>& data, const std::function<double(double)>& cdf) {
            return m3a::ks_one_sample(data, cdf);
        },
        py::arg("data"), py::arg("cdf"));
    m.def(
        "ks_two_sample",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return m3a::ks_two_sample(a, b);
        },
        py::arg("a"), py::arg("b"));
    m.def("bic", &m3a::bic, py::arg("train_loglik"), py::arg("k"), py::arg("n"));
    m.def(
        "evaluate_models",
        [](const std::vector<double>& data, std::uint64_t split_seed, double split_ratio,
           double tolerance, int max_iterations, int restarts, std::size_t min_fit_size,
           std::uint64_t em_seed) {
            m3a::GofConfig cfg;
            cfg.split_ratio = split_ratio;
            cfg.em = make_em_config(tolerance, max_iterations, restarts, min_fit_size, em_seed);
            return m3a::evaluate_models(data, split_seed, cfg);
        },
        py::arg("data"), py::arg("split_seed"), py::arg("split_ratio") = 0.5,
        py::arg("tolerance") = 1e-8, py::arg("max_iterations") = 500, py::arg("restarts") = 3,
        py::arg("min_fit_size") = 10, py::arg("em_seed") = 0);

    // ---- anomaly pipeline -------------------------------------------------------
    m.def(
        "detect",
        [](const std::map<std::string, std::vector<double>>& iats, std::uint64_t seed,
           int threads, std::size_t min_users) {
            std::vector<m3a::IatSeries> series;
            series.reserve(iats.size());
            for (const auto& [user, values] : iats) {
                m3a::IatSeries s;
                s.user_id = user;
                s.iats = values;
                s.n_total_queries = values.size() + 1;
                s.n_landed = values.size() + 1;
                series.push_back(std::move(s));
            }
            m3a::AnomalyConfig cfg;
            cfg.seed = seed;
            cfg.threads = threads;
            cfg.min_users = min_users;
            const auto report = m3a::run_m3a_on_series(series, cfg);

            py::dict out;
            py::list scored;
            for (const auto& rec : report.scored) {
                py::dict d;
                d["user_id"] = rec.user_id;
                d["r"] = rec.features.r;
                d["m"] = rec.features.m;
                d["log_density"] = rec.log_density;
                d["rank"] = rec.rank;
                scored.append(std::move(d));
            }
            py::list outliers;
            for (const auto& rec : report.auto_outliers) {
                py::dict d;
                d["user_id"] = rec.user_id;
                d["reason"] = rec.auto_outlier_reason;
                outliers.append(std::move(d));
            }
            out["scored"] = std::move(scored);
            out["auto_outliers"] = std::move(outliers);
            out["flagged"] = report.flagged;
            out["threshold"] = report.threshold;
            out["eta"] = report.params.eta;
            out["tau"] = report.tau;
            return out;
        },
        py::arg("iats"), py::arg("seed") = 0, py::arg("threads") = 1,
        py::arg("min_users") = 30,
        "run the scoring pipeline on {user_id: [iat, ...]}; query-count screens "
        "are inert here because raw totals are unknown");

    m.def("derive_seed",
          [](std::uint64_t base, const std::string& tag) { return m3a::derive_seed(base, tag); });
}
