#include <doctest.h>

#include <stdexcept>

#include "mevcost/types.hpp"
#include "mevcost/validate.hpp"

using namespace mevcost;

namespace {

TxRecord make_tx(const std::string& suffix, std::int64_t block, std::int64_t index) {
  TxRecord tx;
  tx.tx_hash = std::string(64 - suffix.size(), '0') + suffix;
  tx.block_number = block;
  tx.block_index = index;
  tx.from_addr = std::string(40, 'a');
  tx.to_addr = std::string(40, 'b');
  tx.max_fee_per_gas = 50;
  tx.max_priority_fee_per_gas = 2;
  tx.effective_gas_price = 22;
  tx.gas_used = 21000;
  tx.block_timestamp = 1727740800;  // 2024-10-01
  return tx;
}

}  // namespace

TEST_CASE("hex normalization") {
  CHECK(normalize_address("0xAbCd000000000000000000000000000000000000") ==
        "abcd000000000000000000000000000000000000");
  CHECK(normalize_address(std::string(40, 'F')) == std::string(40, 'f'));
  CHECK_THROWS_AS(normalize_address("0x1234"), std::invalid_argument);
  CHECK_THROWS_AS(normalize_address(std::string(40, 'g')), std::invalid_argument);
  CHECK(normalize_hash("0x" + std::string(64, 'A')) == std::string(64, 'a'));
}

TEST_CASE("utc date helpers") {
  CHECK(parse_date("2024-10-01") == 19997);
  CHECK(format_date(19997) == "2024-10-01");
  CHECK(format_date_compact(19997) == "20241001");
  CHECK(day_from_timestamp(1727740800) == 19997);
  CHECK(day_from_timestamp(1727740800 + 86399) == 19997);
  CHECK(day_from_timestamp(1727740800 + 86400) == 19998);
  CHECK_THROWS_AS(parse_date("October 1"), std::invalid_argument);
}

TEST_CASE("classify_address") {
  const std::string beaver = "0x95222290dd7278aa3ddd389cc1e1d165cc4bafe5";
  LabelRegistry registry;
  registry.add(beaver, {AddressLabel::kMevBuilder});

  SUBCASE("labeled builder address") {
    auto labels = classify_address(registry, beaver);
    CHECK(labels == LabelRegistry::LabelSet{AddressLabel::kMevBuilder});
  }
  SUBCASE("lookup is case-insensitive via normalization") {
    auto labels = classify_address(registry, "0x95222290DD7278Aa3Ddd389Cc1E1d165CC4BAfe5");
    CHECK(labels.count(AddressLabel::kMevBuilder) == 1);
  }
  SUBCASE("unknown address yields the empty set") {
    CHECK(classify_address(registry, std::string(40, '1')).empty());
  }
  SUBCASE("multi-label identity lookup") {
    LabelRegistry reg;
    reg.add(std::string(40, '2'), {AddressLabel::kDex, AddressLabel::kCex});
    auto labels = classify_address(reg, std::string(40, '2'));
    CHECK(labels == LabelRegistry::LabelSet{AddressLabel::kDex, AddressLabel::kCex});
    // Lookups are pure.
    CHECK(classify_address(reg, std::string(40, '2')) == labels);
  }
  SUBCASE("malformed address is an input error") {
    CHECK_THROWS_AS(classify_address(registry, "not-an-address"), std::invalid_argument);
  }
  SUBCASE("duplicate adds merge label sets") {
    LabelRegistry reg;
    reg.add(std::string(40, '3'), {AddressLabel::kDex});
    reg.add(std::string(40, '3'), {AddressLabel::kCex});
    CHECK(reg.lookup(std::string(40, '3')).size() == 2);
    CHECK(reg.size() == 1);
  }
}

TEST_CASE("price table") {
  PriceTable table;
  CHECK_FALSE(table.insert(19997, {22.45, 2597.34}));
  CHECK(table.at(19997).avg_gas_price_gwei == doctest::Approx(22.45));
  CHECK_THROWS_AS(table.at(20000), std::out_of_range);
  CHECK_THROWS_AS(table.insert(19998, {0.0, 100.0}), std::invalid_argument);
  // Last wins on duplicate insert.
  CHECK(table.insert(19997, {30.0, 2500.0}));
  CHECK(table.at(19997).avg_gas_price_gwei == doctest::Approx(30.0));
}

TEST_CASE("validate_dataset") {
  SUBCASE("empty input") {
    auto report = validate_dataset({}, {});
    CHECK(report.n_transactions == 0);
    CHECK(report.clean());
  }
  SUBCASE("duplicate hash is flagged") {
    auto a = make_tx("1", 100, 0);
    auto b = make_tx("1", 100, 1);
    BlockMeta block;
    block.block_number = 100;
    block.tx_count = 2;
    auto report = validate_dataset({a, b}, {block});
    CHECK(report.duplicate_hashes == 1);
    CHECK(report.clean_transactions == 1);
  }
  SUBCASE("block gap: tx_count 3 but 2 present") {
    auto a = make_tx("1", 100, 0);
    auto b = make_tx("2", 100, 1);
    BlockMeta block;
    block.block_number = 100;
    block.tx_count = 3;
    auto report = validate_dataset({a, b}, {block});
    CHECK(report.block_gaps == 1);
    CHECK(report.index_violations == 0);
  }
  SUBCASE("fee invariant violations") {
    auto a = make_tx("1", 100, 0);
    a.max_priority_fee_per_gas = a.max_fee_per_gas + 1;
    auto report = validate_dataset({a}, {});
    CHECK(report.fee_violations == 1);
  }
  SUBCASE("non-contiguous indices") {
    auto a = make_tx("1", 100, 0);
    auto b = make_tx("2", 100, 2);
    auto report = validate_dataset({a, b}, {});
    CHECK(report.index_violations == 1);
  }
}
