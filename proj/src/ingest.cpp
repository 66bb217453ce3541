#include "m3a/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>

#include <zlib.h>

#include "m3a/errors.hpp"

namespace m3a {

namespace {

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

unsigned last_day_of_month(unsigned y, unsigned m) {
    constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m != 2) return kDays[m - 1];
    const bool leap = y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
    return leap ? 29 : 28;
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (const char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

unsigned to_unsigned(std::string_view s) {
    unsigned v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find('\t', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

enum class LogFormat { kClickLog, kMinimal };

// Click-log record: AnonID, Query, QueryTime, ItemRank, ClickURL. The two
// trailing fields are absent on orphan rows in the wild, so only the first
// three are required.
bool parse_clicklog_line(std::string_view line, QueryEvent& ev) {
    const auto fields = split_tabs(line);
    if (fields.size() < 3 || fields.size() > 5) return false;
    if (fields[0].empty()) return false;
    const auto ts = parse_timestamp(fields[2]);
    if (!ts) return false;
    ev.user_id = std::string(fields[0]);
    ev.timestamp = *ts;
    ev.landed = fields.size() >= 5 && !fields[4].empty();
    return true;
}

bool parse_minimal_line(std::string_view line, QueryEvent& ev) {
    const auto fields = split_tabs(line);
    if (fields.size() != 3) return false;
    if (fields[0].empty() || !all_digits(fields[1])) return false;
    std::int64_t ts = 0;
    const auto [ptr, ec] =
        std::from_chars(fields[1].data(), fields[1].data() + fields[1].size(), ts);
    if (ec != std::errc() || ptr != fields[1].data() + fields[1].size()) return false;
    if (fields[2] != "0" && fields[2] != "1") return false;
    ev.user_id = std::string(fields[0]);
    ev.timestamp = ts;
    ev.landed = fields[2] == "1";
    return true;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    // Fixed layout: YYYY-MM-DD HH:MM:SS
    if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != ' ' || s[13] != ':' ||
        s[16] != ':') {
        return std::nullopt;
    }
    const auto year_s = s.substr(0, 4), mon_s = s.substr(5, 2), day_s = s.substr(8, 2);
    const auto hh_s = s.substr(11, 2), mm_s = s.substr(14, 2), ss_s = s.substr(17, 2);
    for (const auto part : {year_s, mon_s, day_s, hh_s, mm_s, ss_s}) {
        if (!all_digits(part)) return std::nullopt;
    }
    const unsigned year = to_unsigned(year_s), mon = to_unsigned(mon_s),
                   day = to_unsigned(day_s);
    const unsigned hh = to_unsigned(hh_s), mm = to_unsigned(mm_s), ss = to_unsigned(ss_s);
    if (mon < 1 || mon > 12 || day < 1 || day > last_day_of_month(year, mon)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    const std::int64_t t =
        days_from_civil(year, mon, day) * 86400 + hh * 3600 + mm * 60 + ss;
    if (t < 0) return std::nullopt;  // pre-epoch timestamps are out of contract
    return t;
}

ParseResult parse_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw DomainError("log stream is empty; expected a header line");
    }
    strip_cr(line);
    const auto header = split_tabs(line);
    LogFormat format;
    if (!header.empty() && header[0] == "AnonID") {
        format = LogFormat::kClickLog;
    } else if (!header.empty() && header[0] == "user_id") {
        format = LogFormat::kMinimal;
    } else {
        throw DomainError("unrecognized log header: expected first column 'AnonID' or 'user_id'");
    }

    ParseResult result;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) continue;
        ++result.stats.n_lines;
        QueryEvent ev;
        const bool ok = format == LogFormat::kClickLog ? parse_clicklog_line(line, ev)
                                                       : parse_minimal_line(line, ev);
        if (ok) {
            ++result.stats.n_records;
            result.events.push_back(std::move(ev));
        } else {
            ++result.stats.n_skipped;
        }
    }
    return result;
}

namespace {

std::string inflate_gz(const std::string& path) {
    gzFile gz = gzopen(path.c_str(), "rb");
    if (gz == nullptr) throw DomainError("cannot open compressed log: " + path);
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(gz, buf, sizeof(buf))) > 0) out.append(buf, static_cast<std::size_t>(n));
    const bool bad = n < 0;
    gzclose(gz);
    if (bad) throw DomainError("corrupt gzip stream: " + path);
    return out;
}

}  // namespace

ParseResult read_log_file(const std::string& path) {
    if (path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0) {
        std::istringstream in(inflate_gz(path));
        return parse_log(in);
    }
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open log file: " + path);
    return parse_log(in);
}

std::vector<IatSeries> extract_iats(std::span<const QueryEvent> events, bool landed_only) {
    struct PerUser {
        std::vector<std::pair<std::int64_t, bool>> rows;  // (timestamp, landed)
        std::size_t n_landed = 0;
    };
    std::map<std::string, PerUser> users;  // ordered: output sorted by user_id
    for (const auto& ev : events) {
        auto& u = users[ev.user_id];
        u.rows.emplace_back(ev.timestamp, ev.landed);
        if (ev.landed) ++u.n_landed;
    }

    std::vector<IatSeries> out;
    out.reserve(users.size());
    for (auto& [id, u] : users) {
        std::sort(u.rows.begin(), u.rows.end());
        IatSeries s;
        s.user_id = id;
        s.n_total_queries = u.rows.size();
        s.n_landed = u.n_landed;
        std::int64_t prev = 0;
        bool have_prev = false;
        for (const auto& [ts, landed] : u.rows) {
            if (landed_only && !landed) continue;
            if (have_prev) {
                const std::int64_t d = ts - prev;
                if (d == 0) {
                    ++s.n_zero_iats;
                } else {
                    s.iats.push_back(static_cast<double>(d));
                }
            }
            prev = ts;
            have_prev = true;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<std::string> orphan_flags(std::span<const IatSeries> series,
                                      std::size_t query_threshold,
                                      std::size_t click_threshold) {
    if (query_threshold == 0 || click_threshold == 0) {
        throw DomainError("orphan_flags thresholds must be positive");
    }
    std::vector<std::string> out;
    for (const auto& s : series) {
        if (s.n_total_queries > query_threshold && s.n_landed < click_threshold) {
            out.push_back(s.user_id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> max_iat_flags(std::span<const IatSeries> series,
                                       std::size_t query_floor, double iat_ceiling) {
    if (query_floor == 0 || !(iat_ceiling > 0.0)) {
        throw DomainError("max_iat_flags thresholds must be positive");
    }
    std::vector<std::string> out;
    for (const auto& s : series) {
        if (s.n_total_queries < query_floor) continue;
        if (s.iats.empty() && s.n_zero_iats == 0) continue;  // no gaps observed
        const double max_gap =
            s.iats.empty() ? 0.0 : *std::max_element(s.iats.begin(), s.iats.end());
        if (max_gap < iat_ceiling) out.push_back(s.user_id);
    }
    std::sort(out.begin(), out.end());
    return out;
}

LogHistogram log_histogram(std::span<const double> iats, int bins_per_decade) {
    if (bins_per_decade < 1) throw DomainError("log_histogram requires bins_per_decade >= 1");
    LogHistogram h;
    if (iats.empty()) return h;

    double lo = iats[0], hi = iats[0];
    for (const double t : iats) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw DomainError("log_histogram requires positive finite values");
        }
        lo = std::min(lo, t);
        hi = std::max(hi, t);
    }

    const double b = double(bins_per_decade);
    const auto edge = [&](long long k) { return std::pow(10.0, double(k) / b); };
    long long k_lo = std::min<long long>(0, (long long)std::floor(b * std::log10(lo)));
    while (edge(k_lo) > lo) --k_lo;  // guard against rounding in log10/pow
    long long k_hi = (long long)std::ceil(b * std::log10(hi));
    while (edge(k_hi) <= hi) ++k_hi;  // last edge strictly beyond the max

    const auto n_bins = static_cast<std::size_t>(k_hi - k_lo);
    h.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i) h.bin_edges[i] = edge(k_lo + (long long)i);
    h.counts.assign(n_bins, 0);

    for (const double t : iats) {
        auto idx = static_cast<std::size_t>(std::clamp<double>(
            std::floor(b * std::log10(t)) - double(k_lo), 0.0, double(n_bins - 1)));
        while (idx > 0 && t < h.bin_edges[idx]) --idx;
        while (idx + 1 < n_bins && t >= h.bin_edges[idx + 1]) ++idx;
        ++h.counts[idx];
    }
    return h;
}

}  // namespace m3a
