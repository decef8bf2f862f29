#include "mevcost/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mevcost/concentration.hpp"
#include "mevcost/csv.hpp"
#include "mevcost/position.hpp"
#include "mevcost/probit.hpp"
#include "mevcost/sandwich.hpp"
#include "mevcost/validate.hpp"

namespace mevcost::pipeline {

namespace {

using nlohmann::json;

const std::vector<std::pair<std::string, std::string>> kFigureInventory = {
    {"figure01", "mev_share_daily.csv"},
    {"figure02", "revenue_daily.csv"},
    {"figure03", "ame_daily.csv"},
    {"figure04", "ame_quantiles_daily.csv"},
    {"figure05", "insurance_daily.csv"},
    {"figure06", "sandwich_counts_daily.csv"},
    {"figure07", "sandwich_profits_daily.csv"},
    {"figure08", "ame_sandwich_daily.csv"},
    {"figure09", "ame_sandwich_quantiles_daily.csv"},
    {"figure10", "sandwich_effect_hist.csv"},
    {"figure11", "eq4_daily.csv"},
    {"figure12", "eq4_daily.csv"},
    {"figure13", "skewness_daily.csv"},
};

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = buffer.str();

  json doc = json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw std::runtime_error("config file is not a JSON object: " + path);
  }

  PipelineConfig config;
  config.config_hash = fnv1a_hex(raw);

  static const std::set<std::string> known = {
      "inputs", "window", "exclude_dates", "buckets", "extended", "amm_fee_rate",
      "ttest_sides", "bootstrap_resamples", "effect_threshold", "insurance_mode",
      "me_gas_floor", "seed", "out_dir", "threads", "synth"};
  for (auto& [key, value] : doc.items()) {
    if (!known.count(key)) {
      throw std::runtime_error("unknown config key '" + key + "' in " + path);
    }
  }

  if (doc.contains("inputs")) {
    const auto& in_obj = doc.at("inputs");
    config.inputs.transactions_path = in_obj.value("transactions", "");
    config.inputs.blocks_path = in_obj.value("blocks", "");
    config.inputs.mempool_path = in_obj.value("mempool", "");
    config.inputs.labels_path = in_obj.value("labels", "");
    config.inputs.sandwiches_path = in_obj.value("sandwiches", "");
    config.inputs.prices_path = in_obj.value("prices", "");
  }
  if (doc.contains("window")) {
    config.inputs.from_day = parse_date(doc.at("window").at("from").get<std::string>());
    config.inputs.to_day = parse_date(doc.at("window").at("to").get<std::string>());
    if (config.inputs.from_day > config.inputs.to_day) {
      throw std::runtime_error("config window: from > to");
    }
  }
  if (doc.contains("exclude_dates")) {
    for (const auto& d : doc.at("exclude_dates")) {
      config.inputs.exclusion_dates.insert(parse_date(d.get<std::string>()));
    }
  }
  if (doc.contains("buckets")) {
    const std::string b = doc.at("buckets").get<std::string>();
    if (b == "quartile") {
      config.n_buckets = 4;
    } else if (b == "decile") {
      config.n_buckets = 10;
    } else {
      throw std::runtime_error("config buckets must be 'quartile' or 'decile'");
    }
  }
  config.extended = doc.value("extended", false);
  config.amm_fee_rate = doc.value("amm_fee_rate", 0.003);
  config.ttest_sides = doc.value("ttest_sides", 2);
  config.bootstrap_resamples = doc.value("bootstrap_resamples", std::size_t{999});
  config.effect_threshold = doc.value("effect_threshold", 0.5);
  if (doc.contains("insurance_mode")) {
    const std::string mode = doc.at("insurance_mode").get<std::string>();
    if (mode == "gap") {
      config.insurance_mode = effects::InsuranceMode::kGapToCertainty;
    } else if (mode == "full") {
      config.insurance_mode = effects::InsuranceMode::kFullProbability;
    } else {
      throw std::runtime_error("config insurance_mode must be 'gap' or 'full'");
    }
  }
  config.me_gas_floor = doc.value("me_gas_floor", 1e-12);
  config.seed = doc.value("seed", std::uint64_t{42});
  config.out_dir = doc.value("out_dir", "out");
  config.threads = doc.value("threads", 0u);

  if (doc.contains("synth")) {
    const auto& s = doc.at("synth");
    auto& sc = config.synth;
    sc.seed = s.value("seed", config.seed);
    if (s.contains("date")) sc.day = parse_date(s.at("date").get<std::string>());
    sc.blocks = s.value("blocks", sc.blocks);
    sc.min_txs_per_block = s.value("min_txs_per_block", sc.min_txs_per_block);
    sc.max_txs_per_block = s.value("max_txs_per_block", sc.max_txs_per_block);
    if (s.contains("true_beta")) {
      const auto& arr = s.at("true_beta");
      if (arr.size() != 8) throw std::runtime_error("synth.true_beta needs 8 entries");
      for (int i = 0; i < 8; ++i) sc.true_beta(i) = arr.at(i).get<double>();
    }
    if (s.contains("true_cutpoints")) {
      const auto& arr = s.at("true_cutpoints");
      sc.true_cutpoints.resize(static_cast<Eigen::Index>(arr.size()));
      for (std::size_t i = 0; i < arr.size(); ++i) {
        sc.true_cutpoints(static_cast<Eigen::Index>(i)) = arr.at(i).get<double>();
      }
    }
    sc.p_to_dex = s.value("p_to_dex", sc.p_to_dex);
    sc.p_to_mev = s.value("p_to_mev", sc.p_to_mev);
    sc.p_from_dex = s.value("p_from_dex", sc.p_from_dex);
    sc.p_from_mev = s.value("p_from_mev", sc.p_from_mev);
    sc.mempool_coverage = s.value("mempool_coverage", sc.mempool_coverage);
    sc.sandwich_rate = s.value("sandwich_rate", sc.sandwich_rate);
    sc.p_mev_built = s.value("p_mev_built", sc.p_mev_built);
    if (s.contains("price")) {
      sc.price.avg_gas_price_gwei = s.at("price").value("avg_gas_price_gwei", 22.45);
      sc.price.eth_close_usd = s.at("price").value("eth_close_usd", 2597.34);
    }
  } else {
    config.synth.seed = config.seed;
  }
  return config;
}

namespace {

struct DayData {
  UtcDay day = 0;
  std::vector<TxRecord> txs;  // sorted (block_number, block_index)
  std::vector<SandwichRecord> sandwiches;
};

struct LoadedData {
  std::vector<TxRecord> txs;
  std::vector<BlockMeta> blocks;
  std::unordered_map<TxHash, std::int64_t> first_seen;
  LabelRegistry registry;
  std::vector<SandwichRecord> sandwiches;
  PriceTable prices;
  std::map<UtcDay, DayData> days;
  std::vector<std::string> load_notes;
};

LoadedData load_all(const PipelineConfig& config, bool need_sandwiches) {
  const auto& paths = config.inputs;
  if (paths.transactions_path.empty() || paths.blocks_path.empty()) {
    throw std::runtime_error("config error: transactions and blocks inputs are required");
  }
  if (config.extended && paths.sandwiches_path.empty()) {
    throw std::runtime_error(
        "config error: the extended model requires the 'sandwiches' input, "
        "which is not configured");
  }
  if (need_sandwiches && paths.sandwiches_path.empty()) {
    throw std::runtime_error(
        "config error: this stage requires the 'sandwiches' input, which is "
        "not configured");
  }

  LoadedData data;
  auto txs = load_transactions(paths.transactions_path);
  auto blocks = load_blocks(paths.blocks_path);
  data.load_notes.push_back("transactions: " + std::to_string(txs.records.size()) +
                            " loaded, " + std::to_string(txs.skipped) + " skipped");
  data.load_notes.push_back("blocks: " + std::to_string(blocks.records.size()) +
                            " loaded, " + std::to_string(blocks.skipped) + " skipped");
  data.txs = std::move(txs.records);
  data.blocks = std::move(blocks.records);

  if (!paths.mempool_path.empty()) {
    auto mempool = load_mempool(paths.mempool_path);
    for (const auto& obs : mempool.records) {
      data.first_seen.emplace(obs.tx_hash, obs.first_seen);
    }
    data.load_notes.push_back("mempool: " + std::to_string(mempool.records.size()) +
                              " unique hashes, " + std::to_string(mempool.skipped) +
                              " skipped");
  }
  if (!paths.labels_path.empty()) {
    auto labels = load_labels(paths.labels_path);
    data.registry = std::move(labels.registry);
    data.load_notes.push_back("labels: " + std::to_string(data.registry.size()) +
                              " addresses");
  }
  if (!paths.sandwiches_path.empty()) {
    auto sandwiches = load_sandwiches(paths.sandwiches_path);
    data.sandwiches = std::move(sandwiches.records);
    data.load_notes.push_back("sandwiches: " + std::to_string(data.sandwiches.size()) +
                              " records, " + std::to_string(sandwiches.skipped) +
                              " skipped");
  }
  if (!paths.prices_path.empty()) {
    auto prices = load_prices(paths.prices_path);
    data.prices = std::move(prices.table);
    for (const auto& w : prices.warnings) data.load_notes.push_back("prices: " + w);
  }

  // Group by UTC day, window-filtered.
  std::unordered_map<std::int64_t, UtcDay> block_day;
  for (const auto& b : data.blocks) {
    block_day[b.block_number] = day_from_timestamp(b.timestamp);
  }
  for (const auto& tx : data.txs) {
    const UtcDay d = day_from_timestamp(tx.block_timestamp);
    if (d < paths.from_day || d > paths.to_day) continue;
    auto& day = data.days[d];
    day.day = d;
    day.txs.push_back(tx);
  }
  for (const auto& s : data.sandwiches) {
    auto it = block_day.find(s.block_number);
    if (it == block_day.end()) continue;
    if (it->second < paths.from_day || it->second > paths.to_day) continue;
    auto day_it = data.days.find(it->second);
    if (day_it != data.days.end()) day_it->second.sandwiches.push_back(s);
  }
  return data;
}

struct DayFitResult {
  UtcDay day = 0;
  DesignBuildResult design;
  DesignMatrix matrix;
  probit::ProbitFit fit;
  std::vector<std::string> warnings;
};

// Per-day design + fit, fanned out over worker threads and merged in date
// order. Each worker owns its day; the fit itself runs single-threaded when
// several days compete for cores.
std::map<UtcDay, DayFitResult> fit_days(const PipelineConfig& config,
                                        const LoadedData& data) {
  std::vector<const DayData*> day_list;
  for (const auto& [day, dd] : data.days) day_list.push_back(&dd);

  unsigned workers = config.threads ? config.threads
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(
                                            day_list.size(), 1)));
  const unsigned fit_threads = day_list.size() > 1 ? 1 : config.threads;

  DesignOptions options{config.n_buckets, config.extended};
  std::vector<DayFitResult> results(day_list.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= day_list.size()) break;
      const DayData& dd = *day_list[i];
      DayFitResult& r = results[i];
      r.day = dd.day;
      try {
        r.design = build_design_rows(dd.txs, data.first_seen, data.registry,
                                     dd.sandwiches, options);
        r.matrix = design_matrix(r.design.rows, options);
        probit::FitConfig fc;
        fc.threads = fit_threads;
        r.fit = probit::fit_ordered_probit(r.matrix, fc);
      } catch (const std::exception& e) {
        throw std::runtime_error("stage 'fit' failed for day " +
                                 format_date(dd.day) + ": " + e.what());
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::future<void>> futures;
    for (unsigned w = 0; w < workers; ++w) {
      futures.push_back(std::async(std::launch::async, worker));
    }
    for (auto& f : futures) f.get();  // rethrows the first failure
  }

  std::map<UtcDay, DayFitResult> by_day;
  for (auto& r : results) by_day.emplace(r.day, std::move(r));
  return by_day;
}

class OutputTracker {
 public:
  OutputTracker(Manifest& manifest, std::string out_dir)
      : manifest_(manifest), out_dir_(std::move(out_dir)) {}

  std::string path(const std::string& name) {
    open_.insert(name);
    return out_dir_ + "/" + name;
  }

  void done(const std::string& name, std::size_t rows) {
    manifest_.outputs.push_back({name, rows, false});
    open_.erase(name);
  }

  // Files opened but never finished when a stage failed.
  void mark_open_incomplete() {
    for (const auto& name : open_) manifest_.outputs.push_back({name, 0, true});
    open_.clear();
  }

 private:
  Manifest& manifest_;
  std::string out_dir_;
  std::set<std::string> open_;
};

std::string fmt_day(UtcDay day) { return format_date(day); }

void run_ingest_check(const LoadedData& data, OutputTracker& tracker) {
  ValidationReport report = validate_dataset(data.txs, data.blocks);
  const std::string path = tracker.path("ingest_check.txt");
  std::ofstream out(path);
  out << to_text(report);
  for (const auto& note : data.load_notes) out << "load: " << note << "\n";
  std::size_t mempool_hit = 0;
  for (const auto& tx : data.txs) {
    if (data.first_seen.count(tx.tx_hash)) ++mempool_hit;
  }
  // The upstream join-failure rate is undocumented; surface it instead of
  // assuming a value.
  if (!data.txs.empty()) {
    out << "mempool_join_rate: "
        << csv::fixed(static_cast<double>(mempool_hit) /
                          static_cast<double>(data.txs.size()),
                      6)
        << "\n";
  }
  tracker.done("ingest_check.txt", 1);
}

void run_fit_outputs(const PipelineConfig& config,
                     const std::map<UtcDay, DayFitResult>& fits,
                     OutputTracker& tracker) {
  for (const auto& [day, r] : fits) {
    const std::string name = "fit_" + format_date_compact(day) + ".txt";
    std::ofstream out(tracker.path(name));
    out << "date: " << fmt_day(day) << "\n"
        << "model: " << (config.extended ? "extended" : "baseline") << "\n"
        << "buckets: " << config.n_buckets << "\n"
        << probit::to_report(r.fit);
    tracker.done(name, 1);
  }
}

std::map<UtcDay, effects::EffectsTable> compute_effects_tables(
    const LoadedData& data, const std::map<UtcDay, DayFitResult>& fits) {
  std::map<UtcDay, effects::EffectsTable> tables;
  for (const auto& [day, r] : fits) {
    const DailyPrice* price =
        data.prices.contains(day) ? &data.prices.at(day) : nullptr;
    tables.emplace(day, effects::average_marginal_effects(r.fit, r.matrix.x, price));
  }
  return tables;
}

void run_effects_outputs(const PipelineConfig& config,
                         const std::map<UtcDay, effects::EffectsTable>& tables,
                         OutputTracker& tracker) {
  csv::Writer daily(tracker.path("ame_daily.csv"), {"date", "variable", "ame_prob"});
  for (const auto& [day, table] : tables) {
    for (std::size_t v = 0; v < table.names.size(); ++v) {
      daily.row({fmt_day(day), table.names[v],
                 csv::fixed(table.ame(static_cast<Eigen::Index>(v)), 8)});
    }
  }
  tracker.done("ame_daily.csv", daily.rows_written());

  for (const auto& [day, table] : tables) {
    const std::string name = "ame_" + format_date_compact(day) + ".csv";
    csv::Writer w(tracker.path(name), {"variable", "ame_prob", "gas_equiv", "usd"});
    w.comment("effects are probabilities of moving into block quartile 1; "
              "sign is opposite the latent coefficient");
    for (std::size_t v = 0; v < table.names.size(); ++v) {
      const auto vi = static_cast<Eigen::Index>(v);
      w.row({table.names[v], csv::fixed(table.ame(vi), 8),
             csv::fixed(table.gas_equivalent(vi), 4),
             std::isfinite(table.usd_cost(vi)) ? csv::fixed(table.usd_cost(vi), 6)
                                               : ""});
    }
    tracker.done(name, w.rows_written());
  }

  csv::Writer quant(tracker.path("ame_quantiles_daily.csv"),
                    {"date", "variable", "p10", "median", "p90"});
  for (const auto& [day, table] : tables) {
    Eigen::MatrixXd q = effects::quantile_marginal_effects(table, {0.1, 0.5, 0.9});
    for (std::size_t v = 0; v < table.names.size(); ++v) {
      const auto vi = static_cast<Eigen::Index>(v);
      quant.row({fmt_day(day), table.names[v], csv::fixed(q(vi, 0), 8),
                 csv::fixed(q(vi, 1), 8), csv::fixed(q(vi, 2), 8)});
    }
  }
  tracker.done("ame_quantiles_daily.csv", quant.rows_written());

  if (config.extended) {
    csv::Writer sand(tracker.path("ame_sandwich_daily.csv"),
                     {"date", "variable", "ame_prob"});
    csv::Writer sandq(tracker.path("ame_sandwich_quantiles_daily.csv"),
                      {"date", "variable", "p10", "median", "p90"});
    for (const auto& [day, table] : tables) {
      Eigen::MatrixXd q = effects::quantile_marginal_effects(table, {0.1, 0.5, 0.9});
      for (std::size_t v = 0; v < table.names.size(); ++v) {
        if (table.names[v] != "front_run" && table.names[v] != "back_run") continue;
        const auto vi = static_cast<Eigen::Index>(v);
        sand.row({fmt_day(day), table.names[v], csv::fixed(table.ame(vi), 8)});
        sandq.row({fmt_day(day), table.names[v], csv::fixed(q(vi, 0), 8),
                   csv::fixed(q(vi, 1), 8), csv::fixed(q(vi, 2), 8)});
      }
    }
    tracker.done("ame_sandwich_daily.csv", sand.rows_written());
    tracker.done("ame_sandwich_quantiles_daily.csv", sandq.rows_written());
  }
}

void run_insurance(const PipelineConfig& config, const LoadedData& data,
                   const std::map<UtcDay, DayFitResult>& fits, OutputTracker& tracker) {
  csv::Writer w(tracker.path("insurance_daily.csv"),
                {"date", "n_txs", "per_tx_gas", "per_tx_usd", "aggregate_gas",
                 "aggregate_usd", "excluded_rows"});
  for (UtcDay day : config.inputs.exclusion_dates) {
    w.comment("excluded: " + fmt_day(day));
  }
  for (const auto& [day, r] : fits) {
    if (config.inputs.exclusion_dates.count(day)) continue;
    if (!data.prices.contains(day)) {
      w.comment("no price row for " + fmt_day(day) + "; day skipped");
      continue;
    }
    auto ins = effects::reordering_insurance(r.fit, r.matrix.x, data.prices.at(day),
                                             config.insurance_mode,
                                             config.me_gas_floor);
    w.row({fmt_day(day), std::to_string(ins.n_rows), csv::fixed(ins.per_tx_gas, 4),
           csv::fixed(ins.per_tx_usd, 6), csv::fixed(ins.aggregate_gas, 2),
           csv::fixed(ins.aggregate_usd, 2), std::to_string(ins.excluded_rows)});
  }
  tracker.done("insurance_daily.csv", w.rows_written());
}

void run_sandwich_stage(const PipelineConfig& config, const LoadedData& data,
                        const std::map<UtcDay, DayFitResult>& fits,
                        const std::map<UtcDay, effects::EffectsTable>& tables,
                        OutputTracker& tracker) {
  auto join = sandwich::join_sandwiches(data.sandwiches, data.txs, data.blocks,
                                        data.first_seen);

  {
    csv::Writer w(tracker.path("sandwich_counts_daily.csv"), {"date", "n_attacks"});
    std::map<UtcDay, std::size_t> counts;
    for (const auto& es : join.enriched) ++counts[es.day];
    for (const auto& [day, count] : counts) {
      w.row({fmt_day(day), std::to_string(count)});
    }
    tracker.done("sandwich_counts_daily.csv", w.rows_written());
  }
  {
    csv::Writer w(tracker.path("sandwich_profits_daily.csv"),
                  {"date", "n_attacks", "total_profit_usd", "total_cost_usd"});
    std::map<UtcDay, std::array<double, 2>> sums;
    std::map<UtcDay, std::size_t> counts;
    for (const auto& es : join.enriched) {
      sums[es.day][0] += es.record.profit_usd;
      sums[es.day][1] += es.record.cost_usd;
      ++counts[es.day];
    }
    for (const auto& [day, s] : sums) {
      w.row({fmt_day(day), std::to_string(counts[day]), csv::fixed(s[0], 2),
             csv::fixed(s[1], 2)});
    }
    tracker.done("sandwich_profits_daily.csv", w.rows_written());
  }

  {
    csv::Writer w(tracker.path("sandwich_tests.csv"),
                  {"test", "mean_a", "mean_b", "sd_a", "sd_b", "n_a", "n_b",
                   "t_stat", "p_value"});
    w.comment("backrun_gas_welch: a = back-run legs, b = all other transactions "
              "(gas fees, ETH); Welch unequal-variance t");
    w.comment("displacement rows: a = mempool position, b = block position; "
              "paired t over legs observed in the mempool; dropped records: " +
              std::to_string(join.dropped));
    if (join.enriched.size() >= 2) {
      auto t = sandwich::backrun_gas_test(join.enriched, data.txs, config.ttest_sides);
      w.row({"backrun_gas_welch", csv::fixed(t.mean_a, 8), csv::fixed(t.mean_b, 8),
             csv::fixed(t.sd_a, 8), csv::fixed(t.sd_b, 8), std::to_string(t.n_a),
             std::to_string(t.n_b), csv::fixed(t.t_stat, 4), csv::fixed(t.p_value, 6)});
      for (const auto& row : sandwich::position_displacement(join.enriched)) {
        w.row({"displacement_" + sandwich::leg_name(row.leg),
               csv::fixed(row.mean_mempool_position, 6),
               csv::fixed(row.mean_block_position, 6), "", "",
               std::to_string(row.n), std::to_string(row.n),
               csv::fixed(row.t_stat, 4), csv::fixed(row.p_value, 6)});
      }
    }
    tracker.done("sandwich_tests.csv", w.rows_written());
  }

  // Eq.-4 regressions, filtered-effect histograms, and skewness series all
  // need the extended-model front/back effects.
  if (!config.extended) return;

  std::map<UtcDay, std::vector<const sandwich::EnrichedSandwich*>> enriched_by_day;
  for (const auto& es : join.enriched) enriched_by_day[es.day].push_back(&es);

  std::map<UtcDay, std::vector<sandwich::EffectRegressionRow>> eq4_rows;
  std::map<UtcDay, std::vector<double>> filtered_effects_front, filtered_effects_back;
  for (const auto& [day, day_enriched] : enriched_by_day) {
    auto fit_it = fits.find(day);
    auto table_it = tables.find(day);
    if (fit_it == fits.end() || table_it == tables.end()) continue;
    const DayFitResult& dr = fit_it->second;
    const effects::EffectsTable& table = table_it->second;

    auto front_col = dr.matrix.column_index("front_run");
    auto back_col = dr.matrix.column_index("back_run");
    if (!front_col || !back_col) continue;

    std::unordered_map<TxHash, Eigen::Index> row_of;
    row_of.reserve(dr.matrix.hashes.size());
    for (std::size_t i = 0; i < dr.matrix.hashes.size(); ++i) {
      row_of.emplace(dr.matrix.hashes[i], static_cast<Eigen::Index>(i));
    }

    for (const sandwich::EnrichedSandwich* es : day_enriched) {
      for (int which = 0; which < 2; ++which) {
        const sandwich::LegInfo& leg = which == 0 ? es->front : es->back;
        auto row_it = row_of.find(leg.hash);
        if (row_it == row_of.end()) continue;
        const std::size_t col = which == 0 ? *front_col : *back_col;
        const double effect =
            table.per_observation(row_it->second, static_cast<Eigen::Index>(col));
        sandwich::EffectRegressionRow row;
        row.effect = effect;
        row.sandwich_cost_usd = es->record.cost_usd;
        row.gas_fee_eth = leg.gas_fee_eth;
        row.block_sandwich_count = static_cast<double>(es->block_sandwich_count);
        row.max_priority_fee_gwei = leg.max_priority_fee_gwei;
        row.sandwich_profit_usd = es->record.profit_usd;
        row.mev_payment_eth = es->block_mev_payment_eth;
        eq4_rows[day].push_back(row);
        auto& bucket = which == 0 ? filtered_effects_front : filtered_effects_back;
        bucket[day].push_back(effect);
      }
    }
  }

  {
    csv::Writer w(tracker.path("sandwich_effect_hist.csv"),
                  {"leg", "bin_lo", "bin_hi", "count"});
    const double lo = config.effect_threshold;
    const int bins = 25;
    for (int which = 0; which < 2; ++which) {
      std::vector<double> all;
      const auto& source = which == 0 ? filtered_effects_front : filtered_effects_back;
      for (const auto& [day, v] : source) {
        auto filtered = sandwich::filter_high_effects(v, config.effect_threshold);
        all.insert(all.end(), filtered.kept.begin(), filtered.kept.end());
      }
      std::vector<std::size_t> hist(bins, 0);
      for (double e : all) {
        int bin = static_cast<int>((e - lo) / (1.0 - lo) * bins);
        bin = std::clamp(bin, 0, bins - 1);
        ++hist[static_cast<std::size_t>(bin)];
      }
      for (int b = 0; b < bins; ++b) {
        const double w0 = lo + (1.0 - lo) * b / bins;
        const double w1 = lo + (1.0 - lo) * (b + 1) / bins;
        w.row({which == 0 ? "front_run" : "back_run", csv::fixed(w0, 4),
               csv::fixed(w1, 4), std::to_string(hist[static_cast<std::size_t>(b)])});
      }
    }
    tracker.done("sandwich_effect_hist.csv", w.rows_written());
  }

  {
    csv::Writer w(tracker.path("eq4_daily.csv"),
                  {"date", "term", "coefficient", "std_error", "robust_std_error",
                   "ci99_lo", "ci99_hi", "n"});
    csv::Writer sk(tracker.path("skewness_daily.csv"),
                   {"date", "sample", "skewness", "ci_lower", "ci_upper", "n",
                    "p_reduction"});
    sk.comment("skewness over front/back effects >= " +
               csv::fixed(config.effect_threshold, 2) +
               "; eq4_raw rows carry the one-sided reduction p-value vs the "
               "eq4 residuals");
    for (const auto& [day, rows] : eq4_rows) {
      if (rows.size() < 14) {
        w.comment("day " + fmt_day(day) + ": too few sandwich legs for eq4 (" +
                  std::to_string(rows.size()) + ")");
        continue;
      }
      sandwich::OLSFit fit;
      try {
        fit = sandwich::fit_effect_regression(rows);
      } catch (const std::exception& e) {
        throw std::runtime_error("stage 'sandwich' failed for day " + fmt_day(day) +
                                 ": " + e.what());
      }
      for (Eigen::Index c = 0; c < fit.coefficients.size(); ++c) {
        const double se = fit.std_errors(c);
        w.row({fmt_day(day), fit.names[static_cast<std::size_t>(c)],
               csv::fixed(fit.coefficients(c), 10), csv::fixed(se, 10),
               csv::fixed(fit.robust_std_errors(c), 10),
               csv::fixed(fit.coefficients(c) - 2.5758293035489 * se, 10),
               csv::fixed(fit.coefficients(c) + 2.5758293035489 * se, 10),
               std::to_string(fit.n_obs)});
      }

      const std::uint64_t day_seed =
          stats::mix_seed(config.seed, static_cast<std::uint64_t>(day));
      auto emit_skew = [&](const std::string& name, const std::vector<double>& sample,
                           std::optional<double> p_reduction) {
        if (sample.size() < 3) return;
        try {
          auto ci = stats::skewness_ci(sample, 0.99, config.bootstrap_resamples,
                                       day_seed);
          sk.row({fmt_day(day), name, csv::fixed(ci.skewness, 6),
                  csv::fixed(ci.lower, 6), csv::fixed(ci.upper, 6),
                  std::to_string(sample.size()),
                  p_reduction ? csv::fixed(*p_reduction, 6) : ""});
        } catch (const std::domain_error&) {
          sk.comment(fmt_day(day) + " " + name + ": skewness undefined");
        }
      };
      auto front_filtered = sandwich::filter_high_effects(
          filtered_effects_front[day], config.effect_threshold);
      auto back_filtered = sandwich::filter_high_effects(filtered_effects_back[day],
                                                         config.effect_threshold);
      emit_skew("front_run", front_filtered.kept, std::nullopt);
      emit_skew("back_run", back_filtered.kept, std::nullopt);

      std::vector<double> raw;
      raw.reserve(rows.size());
      for (const auto& r : rows) raw.push_back(r.effect);
      std::vector<double> residuals(fit.residuals.data(),
                                    fit.residuals.data() + fit.residuals.size());
      double p = stats::skewness_reduction_test(raw, residuals,
                                                config.bootstrap_resamples, day_seed);
      emit_skew("eq4_raw", raw, p);
    }
    tracker.done("eq4_daily.csv", w.rows_written());
    tracker.done("skewness_daily.csv", sk.rows_written());
  }
}

void run_concentration(const PipelineConfig& config, const LoadedData& data,
                       OutputTracker& tracker) {
  const UtcDay from = config.inputs.from_day, to = config.inputs.to_day;
  auto shares = concentration::builder_shares(data.blocks, data.registry, from, to);
  auto hhi = concentration::herfindahl_report(shares);
  const double mev_share =
      concentration::mev_block_share(data.blocks, data.registry, from, to);
  {
    csv::Writer w(tracker.path("shares.csv"),
                  {"builder", "block_count", "block_share", "mev_eth"});
    w.comment("hhi_all_blocks: " + csv::fixed(hhi.all_blocks, 2));
    w.comment("hhi_mev_only: " + csv::fixed(hhi.mev_only, 2));
    w.comment("mev_block_share: " + csv::fixed(mev_share, 6));
    for (const auto& [builder, share] : shares) {
      w.row({builder, std::to_string(share.block_count),
             csv::fixed(share.block_share, 8), csv::fixed(share.mev_eth, 6)});
    }
    tracker.done("shares.csv", w.rows_written());
  }
  {
    csv::Writer w(tracker.path("mev_share_daily.csv"),
                  {"date", "mev_share", "total_blocks"});
    std::map<UtcDay, std::pair<std::int64_t, std::int64_t>> daily;  // mev, total
    for (const auto& b : data.blocks) {
      const UtcDay d = day_from_timestamp(b.timestamp);
      if (d < from || d > to) continue;
      auto& entry = daily[d];
      ++entry.second;
      if (b.builder_addr &&
          data.registry.has_label(*b.builder_addr, AddressLabel::kMevBuilder)) {
        ++entry.first;
      }
    }
    for (const auto& [day, counts] : daily) {
      w.row({fmt_day(day),
             csv::fixed(counts.second > 0 ? static_cast<double>(counts.first) /
                                                static_cast<double>(counts.second)
                                          : 0.0,
                        6),
             std::to_string(counts.second)});
    }
    tracker.done("mev_share_daily.csv", w.rows_written());
  }
  {
    auto revenue = concentration::validator_revenue(data.blocks, data.txs, from, to,
                                                    config.inputs.exclusion_dates);
    csv::Writer w(tracker.path("revenue_daily.csv"),
                  {"date", "net_gas_eth", "mev_payments_eth", "block_count"});
    for (UtcDay day : revenue.excluded) w.comment("excluded: " + fmt_day(day));
    for (const auto& day : revenue.days) {
      w.row({fmt_day(day.day), csv::fixed(day.net_gas_eth, 8),
             csv::fixed(day.mev_payments_eth, 8), std::to_string(day.block_count)});
    }
    tracker.done("revenue_daily.csv", w.rows_written());
  }
}

}  // namespace

void write_manifest(const Manifest& manifest, const std::string& path) {
  std::ofstream out(path);
  out << "mevcost manifest\n";
  out << "config_hash: " << manifest.config_hash << "\n";
  out << "outputs:\n";
  for (const auto& rec : manifest.outputs) {
    out << "  " << rec.name << " rows=" << rec.rows
        << (rec.incomplete ? " incomplete" : "") << "\n";
  }
  out << "figures:\n";
  for (const auto& [figure, file] : manifest.figures) {
    bool emitted = false;
    for (const auto& rec : manifest.outputs) {
      if (rec.name == file && !rec.incomplete) emitted = true;
    }
    out << "  " << figure << " -> " << file
        << (emitted ? "" : " (not emitted this run)") << "\n";
  }
  out << "excluded_dates:";
  if (manifest.excluded_dates.empty()) {
    out << " none";
  } else {
    for (UtcDay day : manifest.excluded_dates) out << " " << format_date(day);
  }
  out << "\n";
  if (!manifest.error.empty()) out << "error: " << manifest.error << "\n";
}

Manifest run_pipeline(const PipelineConfig& config, const std::set<Stage>& stages) {
  std::filesystem::create_directories(config.out_dir);
  Manifest manifest;
  manifest.config_hash = config.config_hash.empty() ? fnv1a_hex("") : config.config_hash;
  manifest.figures = kFigureInventory;
  manifest.excluded_dates.assign(config.inputs.exclusion_dates.begin(),
                                 config.inputs.exclusion_dates.end());
  OutputTracker tracker(manifest, config.out_dir);

  const bool need_fit = stages.count(Stage::kFit) || stages.count(Stage::kEffects) ||
                        stages.count(Stage::kInsurance) ||
                        stages.count(Stage::kSandwich);
  try {
    LoadedData data = load_all(config, stages.count(Stage::kSandwich) > 0);
    std::map<UtcDay, DayFitResult> fits;
    if (need_fit) fits = fit_days(config, data);

    if (stages.count(Stage::kIngestCheck)) run_ingest_check(data, tracker);
    if (stages.count(Stage::kFit)) run_fit_outputs(config, fits, tracker);
    std::map<UtcDay, effects::EffectsTable> tables;
    if (stages.count(Stage::kEffects) || stages.count(Stage::kSandwich)) {
      tables = compute_effects_tables(data, fits);
    }
    if (stages.count(Stage::kEffects)) run_effects_outputs(config, tables, tracker);
    if (stages.count(Stage::kInsurance)) run_insurance(config, data, fits, tracker);
    if (stages.count(Stage::kSandwich)) {
      run_sandwich_stage(config, data, fits, tables, tracker);
    }
    if (stages.count(Stage::kConcentration)) run_concentration(config, data, tracker);
  } catch (const std::exception& e) {
    tracker.mark_open_incomplete();
    manifest.error = e.what();
    write_manifest(manifest, config.out_dir + "/manifest.txt");
    throw;
  }

  write_manifest(manifest, config.out_dir + "/manifest.txt");
  return manifest;
}

}  // namespace mevcost::pipeline
