#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <zlib.h>

#include "doctest.h"
#include "m3a/errors.hpp"
#include "m3a/ingest.hpp"
#include "m3a/io.hpp"

using namespace m3a;

namespace {

const char* kClickLog =
    "AnonID\tQuery\tQueryTime\tItemRank\tClickURL\n"
    "142\tweather\t2006-03-01 07:17:12\t1\thttp://a.example\n"
    "142\tnews\t2006-03-01 07:20:00\n"
    "142\tmaps\t2006-03-01 08:00:00\t2\thttp://b.example\n"
    "217\tlyrics\t2006-03-02 10:00:00\t1\thttp://c.example\n"
    "217\tlyrics again\t2006-03-02 10:00:00\t1\thttp://c.example\n"
    "217\tchords\t2006-03-02 11:30:00\t3\thttp://d.example\n"
    "9\tghost\t2006-02-29 01:00:00\t1\thttp://x.example\n"  // bad date, skipped
    "9\tghost\tnot a time\t1\thttp://x.example\n"           // bad time, skipped
    "\torphan id\t2006-03-01 01:00:00\n"                    // empty id, skipped
    "11\ttoo\tmany\tfields\there\tby one\textra\n";         // 6 fields, skipped

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("timestamps parse on a strict fixed layout") {
    CHECK(parse_timestamp("2006-03-01 07:17:12") == 1141197432);
    CHECK(parse_timestamp("1970-01-01 00:00:00") == 0);
    CHECK(parse_timestamp("2004-02-29 00:00:00").has_value());   // leap year
    CHECK(!parse_timestamp("2006-02-29 00:00:00").has_value());  // not one
    CHECK(!parse_timestamp("2100-02-29 00:00:00").has_value());  // century rule
    CHECK(parse_timestamp("2000-02-29 00:00:00").has_value());   // 400 rule
    CHECK(!parse_timestamp("2006-00-01 00:00:00").has_value());
    CHECK(!parse_timestamp("2006-13-01 00:00:00").has_value());
    CHECK(!parse_timestamp("2006-04-31 00:00:00").has_value());
    CHECK(!parse_timestamp("2006-03-01 24:00:00").has_value());
    CHECK(!parse_timestamp("2006-03-01 07:60:00").has_value());
    CHECK(!parse_timestamp("2006-3-01 07:17:12").has_value());   // wrong width
    CHECK(!parse_timestamp("2006-03-01T07:17:12").has_value());  // wrong separator
    CHECK(!parse_timestamp("1969-12-31 23:59:59").has_value());  // pre-epoch
}

TEST_CASE("click-log parsing keeps the good rows and counts the rest") {
    std::istringstream in(kClickLog);
    const auto result = parse_log(in);
    CHECK(result.stats.n_records == 6);
    CHECK(result.stats.n_skipped == 4);
    CHECK(result.events.size() == 6);
    CHECK(result.events[0].user_id == "142");
    CHECK(result.events[0].timestamp == 1141197432);
    CHECK(result.events[0].landed);
    CHECK(!result.events[1].landed);  // 3-field orphan row
}

TEST_CASE("minimal format and header detection") {
    std::istringstream in(
        "user_id\tepoch_seconds\tlanded\n"
        "a\t100\t1\n"
        "a\t160\t0\n"
        "a\tnonsense\t1\n"
        "a\t200\t2\n");
    const auto result = parse_log(in);
    CHECK(result.stats.n_records == 2);
    CHECK(result.stats.n_skipped == 2);
    CHECK(result.events[1].timestamp == 160);
    CHECK(!result.events[1].landed);

    std::istringstream bad("Something\telse\n1\t2\t3\n");
    CHECK_THROWS_AS((void)parse_log(bad), DomainError);
    std::istringstream empty("");
    CHECK_THROWS_AS((void)parse_log(empty), DomainError);
}

TEST_CASE("crlf input parses the same as unix input") {
    std::istringstream in("user_id\tepoch_seconds\tlanded\r\nu\t10\t1\r\nu\t30\t1\r\n");
    const auto result = parse_log(in);
    CHECK(result.stats.n_records == 2);
    CHECK(result.events[1].timestamp == 30);
}

TEST_CASE("gzip round trip") {
    const auto plain = temp_file("m3a_test_log.tsv");
    const auto gzpath = temp_file("m3a_test_log.tsv.gz");
    const std::string content = "user_id\tepoch_seconds\tlanded\nu\t10\t1\nu\t75\t1\n";
    {
        std::ofstream out(plain, std::ios::binary);
        out << content;
    }
    {
        gzFile gz = gzopen(gzpath.string().c_str(), "wb");
        REQUIRE(gz != nullptr);
        gzwrite(gz, content.data(), static_cast<unsigned>(content.size()));
        gzclose(gz);
    }
    const auto a = read_log_file(plain.string());
    const auto b = read_log_file(gzpath.string());
    CHECK(a.events.size() == b.events.size());
    CHECK(a.events[1].timestamp == b.events[1].timestamp);

    {
        std::ofstream out(gzpath, std::ios::binary);
        out << "this is not gzip data";
    }
    CHECK_THROWS_AS((void)read_log_file(gzpath.string()), DomainError);
    CHECK_THROWS_AS((void)read_log_file("/no/such/file.tsv"), DomainError);
    std::filesystem::remove(plain);
    std::filesystem::remove(gzpath);
}

TEST_CASE("iat extraction sorts, differences, and counts zeros") {
    std::istringstream in(kClickLog);
    const auto parsed = parse_log(in);
    const auto landed = extract_iats(parsed.events, true);
    REQUIRE(landed.size() == 2);  // users 142 and 217, sorted
    CHECK(landed[0].user_id == "142");
    // landed events at 07:17:12 and 08:00:00 -> one IAT of 2568 s
    REQUIRE(landed[0].iats.size() == 1);
    CHECK(landed[0].iats[0] == 2568.0);
    CHECK(landed[0].n_total_queries == 3);
    CHECK(landed[0].n_landed == 2);
    CHECK(landed[0].n_zero_iats == 0);
    // user 217 has a duplicate timestamp: zero gap counted, not stored
    CHECK(landed[1].n_zero_iats == 1);
    REQUIRE(landed[1].iats.size() == 1);
    CHECK(landed[1].iats[0] == 5400.0);

    const auto all = extract_iats(parsed.events, false);
    REQUIRE(all[0].iats.size() == 2);  // orphan row now participates
    CHECK(all[0].iats[0] == 168.0);
    CHECK(all[0].iats[1] == 2400.0);
}

TEST_CASE("events arriving out of order are sorted per user") {
    std::vector<QueryEvent> events = {
        {"u", 500, true}, {"u", 100, true}, {"u", 300, true}};
    const auto series = extract_iats(events, true);
    REQUIRE(series.size() == 1);
    REQUIRE(series[0].iats.size() == 2);
    CHECK(series[0].iats[0] == 200.0);
    CHECK(series[0].iats[1] == 200.0);
}

TEST_CASE("orphan screen fires only past both thresholds") {
    IatSeries heavy;  // > 1000 queries, < 100 landed
    heavy.user_id = "heavy";
    heavy.n_total_queries = 1500;
    heavy.n_landed = 50;
    IatSeries light = heavy;  // too few queries
    light.user_id = "light";
    light.n_total_queries = 800;
    IatSeries clicky = heavy;  // enough clicks
    clicky.user_id = "clicky";
    clicky.n_landed = 150;
    IatSeries edge = heavy;  // exactly at both boundaries: not flagged
    edge.user_id = "edge";
    edge.n_total_queries = 1000;
    edge.n_landed = 100;
    const std::vector<IatSeries> series = {heavy, light, clicky, edge};
    const auto flags = orphan_flags(series, 1000, 100);
    REQUIRE(flags.size() == 1);
    CHECK(flags[0] == "heavy");
    CHECK_THROWS_AS((void)orphan_flags(series, 0, 100), DomainError);
}

TEST_CASE("max-iat screen wants heavy users whose gaps never reach an hour") {
    IatSeries bot;
    bot.user_id = "bot";
    bot.n_total_queries = 2000;
    bot.n_landed = 2000;
    bot.iats = {5.0, 30.0, 3599.0};
    IatSeries human = bot;
    human.user_id = "human";
    human.iats = {5.0, 30.0, 86400.0};
    IatSeries zeros = bot;  // only simultaneous queries: max gap 0
    zeros.user_id = "zeros";
    zeros.iats.clear();
    zeros.n_zero_iats = 40;
    IatSeries quiet = bot;  // no gap information at all: never flagged
    quiet.user_id = "quiet";
    quiet.iats.clear();
    quiet.n_zero_iats = 0;
    IatSeries casual = bot;  // below the query floor
    casual.user_id = "casual";
    casual.n_total_queries = 120;
    const std::vector<IatSeries> series = {bot, human, zeros, quiet, casual};
    const auto flags = max_iat_flags(series, 1000, 3600.0);
    REQUIRE(flags.size() == 2);
    CHECK(flags[0] == "bot");
    CHECK(flags[1] == "zeros");
}

TEST_CASE("log histogram bins by powers of ten anchored at one second") {
    const std::vector<double> ten = {10.0};
    const auto h1 = log_histogram(ten, 1);
    REQUIRE(h1.counts.size() >= 1);
    // the single observation lands in [10, 100)
    double total = 0.0;
    bool found = false;
    for (std::size_t i = 0; i < h1.counts.size(); ++i) {
        total += double(h1.counts[i]);
        if (h1.bin_edges[i] == 10.0 && h1.counts[i] == 1) found = true;
    }
    CHECK(total == 1.0);
    CHECK(found);
    CHECK(h1.bin_edges.back() > 10.0);

    const std::vector<double> mixed = {0.5, 1.0, 2.0, 9.0, 10.0, 11.0, 3600.0};
    const auto h5 = log_histogram(mixed, 5);
    std::size_t sum = 0;
    for (const auto c : h5.counts) sum += c;
    CHECK(sum == mixed.size());  // nothing falls off either end
    CHECK(h5.bin_edges.front() <= 0.5);
    CHECK(h5.bin_edges.back() > 3600.0);
    // edges must be strictly increasing
    for (std::size_t i = 1; i < h5.bin_edges.size(); ++i) {
        CHECK(h5.bin_edges[i] > h5.bin_edges[i - 1]);
    }
    // the anchor edge 1.0 is present exactly
    CHECK(std::count(h5.bin_edges.begin(), h5.bin_edges.end(), 1.0) == 1);

    const auto empty_h = log_histogram(std::vector<double>{}, 5);
    CHECK(empty_h.bin_edges.empty());
    CHECK(empty_h.counts.empty());
    CHECK_THROWS_AS((void)log_histogram(ten, 0), DomainError);
    CHECK_THROWS_AS((void)log_histogram(std::vector<double>{-1.0}, 5), DomainError);
}

}  // TEST_SUITE
