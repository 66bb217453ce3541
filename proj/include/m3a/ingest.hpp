#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace m3a {

struct QueryEvent {
    std::string user_id;
    std::int64_t timestamp = 0;  // seconds since epoch, 1 s resolution
    bool landed = false;         // had a click-through
};

struct ParseStats {
    std::size_t n_lines = 0;    // data lines seen (header excluded)
    std::size_t n_records = 0;  // events successfully parsed
    std::size_t n_skipped = 0;  // malformed lines dropped
};

struct ParseResult {
    std::vector<QueryEvent> events;
    ParseStats stats;
};

// Per-user IAT series. Consecutive same-second events produce zero IATs,
// which are dropped and counted (log-scale models have no mass at zero, and
// the count itself is a robot signal). With landed-only extraction,
// iats.size() == n_landed - 1 - n_zero_iats whenever n_landed >= 1.
struct IatSeries {
    std::string user_id;
    std::vector<double> iats;  // positive integer seconds, chronological
    std::size_t n_zero_iats = 0;
    std::size_t n_total_queries = 0;
    std::size_t n_landed = 0;
};

struct LogHistogram {
    std::vector<double> bin_edges;   // geometric; counts[i] covers [edge_i, edge_i+1)
    std::vector<std::size_t> counts;
};

// Detected by the header line: either the click-log format (tab-separated
// AnonID, Query, QueryTime, ItemRank, ClickURL; landed = nonempty ClickURL)
// or the minimal synthetic format (user_id, epoch_seconds, landed as 0/1).
// Malformed records are skipped and counted, never fatal.
ParseResult parse_log(std::istream& in);

// File convenience wrapper; transparently inflates *.gz.
ParseResult read_log_file(const std::string& path);

// "YYYY-MM-DD HH:MM:SS" -> seconds since epoch; nullopt if malformed.
std::optional<std::int64_t> parse_timestamp(std::string_view s);

// Group by user, sort by time, difference. landed_only drops orphan events
// before differencing. Output sorted by user_id; input order is irrelevant.
std::vector<IatSeries> extract_iats(std::span<const QueryEvent> events, bool landed_only);

// Heavy posters who almost never click: n_total_queries > query_threshold
// and n_landed < click_threshold. Returns user ids, sorted.
std::vector<std::string> orphan_flags(std::span<const IatSeries> series,
                                      std::size_t query_threshold = 1000,
                                      std::size_t click_threshold = 100);

// Round-the-clock posters: at least query_floor queries and no gap as long
// as iat_ceiling seconds (a user active for days with no sleep-length pause).
// Users whose series carries no gap information are never flagged.
std::vector<std::string> max_iat_flags(std::span<const IatSeries> series,
                                       std::size_t query_floor = 1000,
                                       double iat_ceiling = 3600.0);

// Geometric bins at 10^(k/bins_per_decade), anchored at 1 s and extended
// downward only when the data dips below 1; the last edge lies strictly
// beyond max(iats). Counts sum to iats.size(). Empty input -> empty histogram.
LogHistogram log_histogram(std::span<const double> iats, int bins_per_decade);

}  // namespace m3a
