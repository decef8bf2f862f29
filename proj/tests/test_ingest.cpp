#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "mevcost/ingest.hpp"

using namespace mevcost;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("mevcost_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name, const std::string& content) const {
    auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

std::string hash64(char c) { return std::string(64, c); }
std::string addr40(char c) { return std::string(40, c); }

const std::string kTxHeader =
    "tx_hash,block_number,block_index,from_addr,to_addr,max_fee_per_gas_gwei,"
    "max_priority_fee_per_gas_gwei,effective_gas_price_gwei,gas_used,value_wei,"
    "block_timestamp\n";

std::string tx_row(char h, int block, int index, const std::string& extra = "") {
  return hash64(h) + "," + std::to_string(block) + "," + std::to_string(index) + "," +
         addr40('a') + "," + addr40('b') + ",50,2,22," + (extra.empty() ? "21000" : extra) +
         ",0,1727740800\n";
}

}  // namespace

TEST_CASE("load_transactions sorts and skips") {
  TempDir dir;
  SUBCASE("rows out of order are sorted by (block, index)") {
    auto path = dir.file("txs.csv",
                         kTxHeader + tx_row('3', 100, 2) + tx_row('1', 100, 0) +
                             tx_row('2', 100, 1));
    auto result = load_transactions(path);
    REQUIRE(result.records.size() == 3);
    CHECK(result.records[0].block_index == 0);
    CHECK(result.records[1].block_index == 1);
    CHECK(result.records[2].block_index == 2);
    CHECK(result.rows_read == result.records.size() + result.skipped);
  }
  SUBCASE("negative gas_used row is skipped and counted") {
    auto path = dir.file("txs.csv", kTxHeader + tx_row('1', 100, 0) +
                                        tx_row('2', 100, 1, "-5"));
    auto result = load_transactions(path);
    CHECK(result.records.size() == 1);
    CHECK(result.skipped == 1);
  }
  SUBCASE("unparseable numeric field is skipped") {
    auto path = dir.file("txs.csv", kTxHeader + tx_row('1', 100, 0) +
                                        (hash64('2') + ",abc,0," + addr40('a') + "," +
                                         addr40('b') + ",50,2,22,21000,0,1727740800\n"));
    auto result = load_transactions(path);
    CHECK(result.records.size() == 1);
    CHECK(result.skipped == 1);
  }
  SUBCASE("empty to_addr becomes contract creation") {
    auto path = dir.file("txs.csv", kTxHeader + hash64('1') + ",100,0," + addr40('a') +
                                        ",,50,2,22,21000,0,1727740800\n");
    auto result = load_transactions(path);
    REQUIRE(result.records.size() == 1);
    CHECK_FALSE(result.records[0].to_addr.has_value());
  }
  SUBCASE("missing required column is a configuration error") {
    auto path = dir.file("txs.csv", "tx_hash,block_number\nabc,1\n");
    CHECK_THROWS_WITH_AS(load_transactions(path),
                         doctest::Contains("missing required column"),
                         std::runtime_error);
  }
  SUBCASE("unreadable file is an I/O error") {
    CHECK_THROWS_AS(load_transactions(dir.path.string() + "/absent.csv"),
                    std::runtime_error);
  }
  SUBCASE("loading is deterministic") {
    auto path = dir.file("txs.csv",
                         kTxHeader + tx_row('3', 100, 2) + tx_row('1', 100, 0));
    auto r1 = load_transactions(path);
    auto r2 = load_transactions(path);
    REQUIRE(r1.records.size() == r2.records.size());
    for (std::size_t i = 0; i < r1.records.size(); ++i) {
      CHECK(r1.records[i].tx_hash == r2.records[i].tx_hash);
    }
  }
}

TEST_CASE("load_mempool dedups to earliest sighting") {
  TempDir dir;
  auto line = [](const std::string& hash, std::int64_t t, const std::string& region) {
    return "{\"tx_hash\":\"" + hash + "\",\"first_seen_ms\":" + std::to_string(t) +
           ",\"region\":\"" + region + "\"}\n";
  };
  SUBCASE("min-timestamp rule across regions") {
    auto path = dir.file("mp.jsonl", line(hash64('a'), 100, "us-east") +
                                         line(hash64('a'), 90, "eu-west"));
    auto result = load_mempool(path);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].first_seen == 90);
    CHECK(result.records[0].region == "eu-west");
  }
  SUBCASE("empty file yields empty sequence") {
    auto path = dir.file("mp.jsonl", "");
    CHECK(load_mempool(path).records.empty());
  }
  SUBCASE("5 hashes x 3 regions yield 5 records") {
    std::string content;
    for (char h : {'1', '2', '3', '4', '5'}) {
      for (int r = 0; r < 3; ++r) {
        content += line(hash64(h), 1000 + r, "region" + std::to_string(r));
      }
    }
    auto path = dir.file("mp.jsonl", content);
    auto result = load_mempool(path);
    CHECK(result.records.size() == 5);
    CHECK(result.rows_read == 15);
    for (const auto& obs : result.records) CHECK(obs.first_seen == 1000);
  }
  SUBCASE("non-positive first_seen is skipped") {
    auto path = dir.file("mp.jsonl", line(hash64('a'), 0, "x"));
    auto result = load_mempool(path);
    CHECK(result.records.empty());
    CHECK(result.skipped == 1);
  }
}

TEST_CASE("load_labels") {
  TempDir dir;
  SUBCASE("single DEX address") {
    auto path = dir.file("labels.json",
                         "{\"" + addr40('d') + "\": [\"DEX\"]}");
    auto result = load_labels(path);
    CHECK(result.registry.size() == 1);
    CHECK(result.registry.lookup(addr40('d')).count(AddressLabel::kDex) == 1);
  }
  SUBCASE("labels merge for duplicate addresses (object keys collapse upstream)") {
    auto path = dir.file("labels.json",
                         "{\"" + addr40('e') + "\": [\"DEX\", \"CEX\"]}");
    auto result = load_labels(path);
    auto labels = result.registry.lookup(addr40('e'));
    CHECK(labels == LabelRegistry::LabelSet{AddressLabel::kDex, AddressLabel::kCex});
  }
  SUBCASE("ten builder addresses load as ten MEV_BUILDER entries") {
    std::string content = "{";
    for (int i = 0; i < 10; ++i) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%040x", 0xb000 + i);
      content += std::string(i ? "," : "") + "\"" + buf + "\": [\"MEV_BUILDER\"]";
    }
    content += "}";
    auto path = dir.file("labels.json", content);
    auto result = load_labels(path);
    CHECK(result.registry.size() == 10);
    char buf[48];
    std::snprintf(buf, sizeof buf, "%040x", 0xb003);
    CHECK(result.registry.lookup(buf).count(AddressLabel::kMevBuilder) == 1);
  }
  SUBCASE("unknown label names warn and are skipped") {
    auto path = dir.file("labels.json", "{\"" + addr40('f') + "\": [\"ROUTER\"]}");
    auto result = load_labels(path);
    CHECK(result.registry.lookup(addr40('f')).empty());
    CHECK(result.warnings.size() == 1);
  }
}

TEST_CASE("load_sandwiches") {
  TempDir dir;
  const std::string header =
      "block_number,front_hash,victim_hash,back_hash,cost_usd,profit_usd\n";
  SUBCASE("one triple row loads") {
    auto path = dir.file("sw.csv", header + "100," + hash64('1') + "," + hash64('2') +
                                       "," + hash64('3') + ",500.5,12.25\n");
    auto result = load_sandwiches(path);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].cost_usd == doctest::Approx(500.5));
  }
  SUBCASE("front == back violates distinctness and is rejected") {
    auto path = dir.file("sw.csv", header + "100," + hash64('1') + "," + hash64('2') +
                                       "," + hash64('1') + ",500,12\n");
    auto result = load_sandwiches(path);
    CHECK(result.records.empty());
    CHECK(result.skipped == 1);
  }
}

TEST_CASE("load_prices") {
  TempDir dir;
  const std::string header = "date,avg_gas_price_gwei,eth_close_usd\n";
  SUBCASE("table entry for a loaded date") {
    auto path = dir.file("px.csv", header + "2024-10-01,22.45,2597.34\n");
    auto result = load_prices(path);
    CHECK(result.table.at(parse_date("2024-10-01")).eth_close_usd ==
          doctest::Approx(2597.34));
  }
  SUBCASE("missing date errors at query time") {
    auto path = dir.file("px.csv", header + "2024-10-01,22.45,2597.34\n");
    auto result = load_prices(path);
    CHECK_THROWS_AS(result.table.at(parse_date("2024-10-02")), std::out_of_range);
  }
  SUBCASE("duplicate date: last wins with a warning") {
    auto path = dir.file("px.csv", header + "2024-10-01,22.45,2597.34\n" +
                                       "2024-10-01,30.00,2600.00\n");
    auto result = load_prices(path);
    CHECK(result.table.at(parse_date("2024-10-01")).avg_gas_price_gwei ==
          doctest::Approx(30.0));
    CHECK(result.warnings.size() == 1);
  }
  SUBCASE("non-positive values are skipped") {
    auto path = dir.file("px.csv", header + "2024-10-01,0,2597.34\n");
    auto result = load_prices(path);
    CHECK(result.table.size() == 0);
    CHECK(result.skipped == 1);
  }
}
