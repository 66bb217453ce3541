#include "m3a/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "m3a/errors.hpp"

namespace m3a {

std::string format_double(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw DomainError("format_double: value does not fit");
    return std::string(buf, end);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: no CRLF surprises
    if (!out) throw DomainError("cannot open output file: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open input file: " + path);
    return in;
}

// Splits one CSV line honoring the quoting produced by csv_escape.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                field += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

double parse_double_field(const std::string& s, const std::string& path) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) {
        throw DomainError("bad numeric field '" + s + "' in " + path);
    }
    return v;
}

}  // namespace

void write_iats_csv(const std::string& path, std::span<const IatSeries> series) {
    auto out = open_out(path);
    out << "user_id,iat_seconds\n";
    for (const auto& s : series) {
        const std::string id = csv_escape(s.user_id);
        for (const double t : s.iats) out << id << ',' << format_double(t) << '\n';
    }
}

std::vector<IatSeries> read_iats_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{
                                       "user_id", "iat_seconds"}) {
        throw DomainError("expected header 'user_id,iat_seconds' in " + path);
    }
    std::vector<IatSeries> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != 2) {
            throw DomainError(path + ":" + std::to_string(line_no) + ": expected 2 fields");
        }
        const double iat = parse_double_field(fields[1], path);
        if (!(iat > 0.0) || !std::isfinite(iat)) {
            throw DomainError(path + ":" + std::to_string(line_no) + ": IAT must be positive");
        }
        if (out.empty() || out.back().user_id != fields[0]) {
            // rows for one user must be contiguous (the writer guarantees it)
            for (const auto& prev : out) {
                if (prev.user_id == fields[0]) {
                    throw DomainError(path + ": rows for user '" + fields[0] +
                                      "' are not contiguous");
                }
            }
            IatSeries s;
            s.user_id = fields[0];
            out.push_back(std::move(s));
        }
        out.back().iats.push_back(iat);
    }
    return out;
}

void write_summary_csv(const std::string& path, std::span<const IatSeries> series) {
    auto out = open_out(path);
    out << "user_id,n_total_queries,n_landed,n_orphan,n_zero_iats,n_iats,"
           "min_iat,median_iat,max_iat\n";
    for (const auto& s : series) {
        out << csv_escape(s.user_id) << ',' << s.n_total_queries << ',' << s.n_landed << ','
            << (s.n_total_queries - s.n_landed) << ',' << s.n_zero_iats << ','
            << s.iats.size() << ',';
        if (s.iats.empty()) {
            out << ",,";
        } else {
            std::vector<double> sorted(s.iats.begin(), s.iats.end());
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            const double med =
                n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
            out << format_double(sorted.front()) << ',' << format_double(med) << ','
                << format_double(sorted.back());
        }
        out << '\n';
    }
}

void write_histogram_csv(const std::string& path, const LogHistogram& h) {
    auto out = open_out(path);
    out << "bin_low,bin_high,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        out << format_double(h.bin_edges[i]) << ',' << format_double(h.bin_edges[i + 1])
            << ',' << h.counts[i] << '\n';
    }
}

void write_params_csv(const std::string& path, std::span<const UserFitRow> rows) {
    auto out = open_out(path);
    out << "user_id,theta,alpha_in,beta_in,alpha_off,beta_off,train_loglik,"
           "n_iterations,converged,collapsed,error\n";
    for (const auto& row : rows) {
        out << csv_escape(row.user_id) << ',';
        if (row.error.empty()) {
            const auto& p = row.report.params;
            out << format_double(p.theta) << ',' << format_double(p.in_component.alpha)
                << ',' << format_double(p.in_component.beta) << ','
                << format_double(p.off_component.alpha) << ','
                << format_double(p.off_component.beta) << ','
                << format_double(row.report.train_loglik) << ',' << row.report.n_iterations
                << ',' << (row.report.converged ? 1 : 0) << ','
                << (row.report.collapsed ? 1 : 0) << ',';
        } else {
            out << ",,,,,,,,," << csv_escape(row.error);
        }
        out << '\n';
    }
}

void write_gof_csv(const std::string& path, std::span<const UserGofRow> rows) {
    auto out = open_out(path);
    out << "user_id,model,test_loglik,bic,ks_statistic,ks_p_value,n_effective,error\n";
    for (const auto& row : rows) {
        const auto& s = row.score;
        out << csv_escape(row.user_id) << ',' << s.model_name << ',';
        if (s.error.empty()) {
            out << format_double(s.test_loglik) << ',' << format_double(s.bic) << ','
                << format_double(s.ks.statistic) << ',' << format_double(s.ks.p_value) << ','
                << format_double(s.ks.n_effective) << ',';
        } else {
            out << ",,,,," << csv_escape(s.error);
        }
        out << '\n';
    }
}

void write_report_csv(const std::string& path, const RankWeirdnessReport& report) {
    auto out = open_out(path);
    out << "user_id,r,m,log_density,rank,flagged,reason\n";
    for (const auto& rec : report.scored) {
        const bool flagged = rec.log_density < report.threshold;
        out << csv_escape(rec.user_id) << ',' << format_double(rec.features.r) << ','
            << format_double(rec.features.m) << ',' << format_double(rec.log_density) << ','
            << rec.rank << ',' << (flagged ? 1 : 0) << ','
            << (rec.score_clamped ? "clamped-score" : "") << '\n';
    }
    for (const auto& rec : report.auto_outliers) {
        out << csv_escape(rec.user_id) << ",,,,,," << rec.auto_outlier_reason << '\n';
    }
}

void write_reference_csv(const std::string& path, const RankWeirdnessReport& report) {
    auto out = open_out(path);
    out << "rank,log_density\n";
    for (std::size_t i = 0; i < report.reference.size(); ++i) {
        out << (i + 1) << ',' << format_double(report.reference[i]) << '\n';
    }
}

void write_qq_csv(const std::string& path, const std::string& user_id,
                  std::span<const std::pair<double, double>> points) {
    auto out = open_out(path);
    out << "user_id,empirical_q,model_q\n";
    const std::string id = csv_escape(user_id);
    for (const auto& [emp, mod] : points) {
        out << id << ',' << format_double(emp) << ',' << format_double(mod) << '\n';
    }
}

void write_minimal_log(const std::string& path, std::span<const QueryEvent> events) {
    auto out = open_out(path);
    out << "user_id\tepoch_seconds\tlanded\n";
    for (const auto& ev : events) {
        out << ev.user_id << '\t' << ev.timestamp << '\t' << (ev.landed ? 1 : 0) << '\n';
    }
}

}  // namespace m3a
