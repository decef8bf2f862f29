#include "mevcost/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mevcost/csv.hpp"
#include "mevcost/position.hpp"
#include "mevcost/stats.hpp"

namespace mevcost::synth {

namespace {

using stats::BootstrapRng;

double u01_open(BootstrapRng& rng) {
  return (static_cast<double>(rng.next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double normal_draw(BootstrapRng& rng) {
  return stats::normal_quantile(u01_open(rng));
}

int poisson_draw(BootstrapRng& rng, double rate) {
  if (rate <= 0) return 0;
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1;
  do {
    ++k;
    p *= u01_open(rng);
  } while (p > limit);
  return k - 1;
}

std::string make_address(char prefix, std::int64_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%c%c%038llx", prefix, prefix,
                static_cast<unsigned long long>(i));
  return buf;
}

std::string make_hash(BootstrapRng& rng) {
  char buf[72];
  std::snprintf(buf, sizeof buf, "%016llx%016llx%016llx%016llx",
                static_cast<unsigned long long>(rng.next_u64()),
                static_cast<unsigned long long>(rng.next_u64()),
                static_cast<unsigned long long>(rng.next_u64()),
                static_cast<unsigned long long>(rng.next_u64()));
  return buf;
}

template <typename T>
void shuffle_in_place(std::vector<T>& v, BootstrapRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.next_index(i)]);
  }
}

void validate(const SynthConfig& c) {
  if (c.blocks < 1) throw std::invalid_argument("synth: need at least one block");
  if (c.min_txs_per_block < 8 || c.max_txs_per_block < c.min_txs_per_block) {
    throw std::invalid_argument("synth: block size range invalid (min >= 8)");
  }
  if (c.true_beta.size() != 8) {
    throw std::invalid_argument("synth: true_beta must cover the 8 baseline regressors");
  }
  for (Eigen::Index m = 1; m < c.true_cutpoints.size(); ++m) {
    if (!(c.true_cutpoints(m) > c.true_cutpoints(m - 1))) {
      throw std::invalid_argument("synth: cutpoints must be strictly increasing");
    }
  }
  for (double p : {c.p_to_dex, c.p_to_mev, c.p_from_dex, c.p_from_mev,
                   c.p_contract_creation, c.mempool_coverage,
                   c.sandwich_mempool_coverage, c.p_mev_built}) {
    if (p < 0 || p > 1) throw std::invalid_argument("synth: probability outside [0,1]");
  }
  if (c.sandwich_rate < 0) throw std::invalid_argument("synth: negative sandwich rate");
  if (c.sandwich_rate * 3 > c.min_txs_per_block) {
    throw std::invalid_argument("synth: sandwich rate x 3 exceeds block capacity");
  }
  if (c.sandwich_rate > 0 && c.min_txs_per_block / 10 < 3) {
    throw std::invalid_argument("synth: front decile too small for a sandwich triple");
  }
}

}  // namespace

LabelRegistry SynthDay::registry() const {
  LabelRegistry reg;
  for (const auto& [addr, names] : labels) {
    LabelRegistry::LabelSet set;
    for (const auto& name : names) {
      if (auto label = parse_label(name)) set.insert(*label);
    }
    reg.add(addr, set);
  }
  return reg;
}

SynthDay generate_synthetic_day(const SynthConfig& config, std::uint64_t seed) {
  validate(config);
  BootstrapRng rng(stats::mix_seed(seed, static_cast<std::uint64_t>(config.day)));

  SynthDay out;
  out.day = config.day;
  out.price = config.price;

  std::vector<Address> users, attackers, dexes, mevs, cexes;
  for (int i = 0; i < config.n_user_addresses; ++i) users.push_back(make_address('a', i));
  for (int i = 0; i < config.n_attacker_addresses; ++i)
    attackers.push_back(make_address('c', i));
  for (int i = 0; i < config.n_dex_addresses; ++i) dexes.push_back(make_address('d', i));
  for (int i = 0; i < config.n_mev_addresses; ++i) mevs.push_back(make_address('e', i));
  for (int i = 0; i < 3; ++i) cexes.push_back(make_address('b', i));

  for (const auto& a : dexes) out.labels.emplace_back(a, std::vector<std::string>{"DEX"});
  for (const auto& a : mevs)
    out.labels.emplace_back(a, std::vector<std::string>{"MEV_BUILDER"});
  for (const auto& a : cexes) out.labels.emplace_back(a, std::vector<std::string>{"CEX"});
  std::sort(out.labels.begin(), out.labels.end());

  const std::int64_t day_start_s = static_cast<std::int64_t>(config.day) * 86400;
  const std::int64_t first_block = static_cast<std::int64_t>(config.day) * 7200;
  const int min4 = config.min_txs_per_block / 4;
  const int max4 = config.max_txs_per_block / 4;

  struct PendingTx {
    TxRecord tx;
    bool observed = false;
    std::int64_t first_seen = 0;
    bool is_leg = false;
    int forced_slot = -1;  // sandwich legs get explicit near-front slots
  };

  for (int b = 0; b < config.blocks; ++b) {
    const int n = 4 * (min4 + static_cast<int>(rng.next_index(
                                  static_cast<std::size_t>(max4 - min4 + 1))));
    const std::int64_t block_number = first_block + b;
    const std::int64_t block_ts = day_start_s + 12 * b;
    const std::int64_t block_ms = block_ts * 1000;
    const double base_fee = 10.0 + 20.0 * u01_open(rng);

    // Sandwich count is capped so all triples fit in the front decile.
    const int band = n / 10;
    int n_sandwich = poisson_draw(rng, config.sandwich_rate);
    n_sandwich = std::min(n_sandwich, band / 3);

    // Leg slots: triples sit adjacent at the front of the block, except the
    // occasional placement miss, which lands at a uniform later offset.
    std::vector<int> leg_slots;
    {
      std::vector<bool> taken(static_cast<std::size_t>(n), false);
      int front_cursor = 0;
      for (int s = 0; s < n_sandwich; ++s) {
        int start;
        if (u01_open(rng) < config.sandwich_placement_miss_rate) {
          for (int attempt = 0;; ++attempt) {
            start = band + static_cast<int>(rng.next_index(
                               static_cast<std::size_t>(n - band - 2)));
            if (!taken[start] && !taken[start + 1] && !taken[start + 2]) break;
            if (attempt > 64) {  // pathological density; fall back to front
              start = front_cursor;
              break;
            }
          }
        } else {
          start = front_cursor;
        }
        if (start == front_cursor) front_cursor += 3;
        for (int leg = 0; leg < 3; ++leg) {
          leg_slots.push_back(start + leg);
          taken[static_cast<std::size_t>(start + leg)] = true;
        }
      }
    }

    std::vector<PendingTx> pending;
    pending.reserve(static_cast<std::size_t>(n));

    // The fee cap rides on a fixed 20-Gwei floor rather than the block's
    // base fee: a within-block-common regressor component is invisible to
    // rank placement and would attenuate the fitted fee coefficient.
    auto draw_fee_fields = [&](TxRecord& tx, double priority_scale) {
      double cap = std::exp(config.fee_log_mean + config.fee_log_sd * normal_draw(rng));
      double priority = u01_open(rng) * std::min(cap, 4.0) * priority_scale;
      if (priority > cap) cap = priority * 1.5;
      tx.max_fee_per_gas = 20.0 + cap;
      tx.max_priority_fee_per_gas = priority;
      tx.effective_gas_price = base_fee + priority;
    };
    auto observe = [&](PendingTx& p, double coverage) {
      if (u01_open(rng) < coverage) {
        p.observed = true;
        p.first_seen = block_ms - 60000 + static_cast<std::int64_t>(
                                              u01_open(rng) * 60000.0);
      }
    };

    for (int s = 0; s < n_sandwich; ++s) {
      const Address attacker = attackers[rng.next_index(attackers.size())];
      const Address venue = dexes[rng.next_index(dexes.size())];
      const Address victim_from = users[rng.next_index(users.size())];
      SandwichRecord record;
      record.block_number = block_number;
      record.cost_usd = std::exp(std::log(500.0) + normal_draw(rng));
      record.profit_usd = std::exp(std::log(30.0) + normal_draw(rng));

      for (int leg = 0; leg < 3; ++leg) {
        PendingTx p;
        p.is_leg = true;
        p.forced_slot = leg_slots[static_cast<std::size_t>(3 * s + leg)];
        TxRecord& tx = p.tx;
        tx.tx_hash = make_hash(rng);
        tx.block_number = block_number;
        tx.block_timestamp = block_ts;
        tx.to_addr = venue;
        tx.gas_used = 100000.0 + u01_open(rng) * 100000.0;
        if (leg == 0) {
          tx.from_addr = attacker;
          tx.value_wei = (1.0 + 4.0 * u01_open(rng)) * kWeiPerEth;
          draw_fee_fields(tx, 1.0);
          record.front_hash = tx.tx_hash;
        } else if (leg == 1) {
          tx.from_addr = victim_from;
          tx.value_wei = (0.5 + 2.0 * u01_open(rng)) * kWeiPerEth;
          draw_fee_fields(tx, 1.0);
          record.victim_hash = tx.tx_hash;
        } else {
          tx.from_addr = attacker;
          tx.value_wei = 0;
          // Back runs pay roughly multiplier x the baseline effective price
          // (the attacker buys certainty of inclusion when flattening).
          draw_fee_fields(tx, 1.0);
          const double mult = config.back_run_priority_multiplier;
          tx.max_priority_fee_per_gas =
              mult * (base_fee + 2.0 + 2.0 * u01_open(rng)) - base_fee;
          tx.effective_gas_price = base_fee + tx.max_priority_fee_per_gas;
          if (tx.max_priority_fee_per_gas > tx.max_fee_per_gas) {
            tx.max_fee_per_gas = tx.max_priority_fee_per_gas * 1.2;
          }
          record.back_hash = tx.tx_hash;
        }
        observe(p, config.sandwich_mempool_coverage);
        pending.push_back(std::move(p));
      }
      out.sandwiches.push_back(std::move(record));
    }

    // Regular transactions for the remaining slots.
    const int n_regular = n - 3 * n_sandwich;
    for (int i = 0; i < n_regular; ++i) {
      PendingTx p;
      TxRecord& tx = p.tx;
      tx.tx_hash = make_hash(rng);
      tx.block_number = block_number;
      tx.block_timestamp = block_ts;

      const double u_to = u01_open(rng);
      if (u_to < config.p_contract_creation) {
        tx.to_addr.reset();
      } else if (u_to < config.p_contract_creation + config.p_to_dex) {
        tx.to_addr = dexes[rng.next_index(dexes.size())];
      } else if (u_to < config.p_contract_creation + config.p_to_dex + config.p_to_mev) {
        tx.to_addr = mevs[rng.next_index(mevs.size())];
      } else {
        tx.to_addr = users[rng.next_index(users.size())];
      }
      const double u_from = u01_open(rng);
      if (u_from < config.p_from_dex) {
        tx.from_addr = dexes[rng.next_index(dexes.size())];
      } else if (u_from < config.p_from_dex + config.p_from_mev) {
        tx.from_addr = mevs[rng.next_index(mevs.size())];
      } else {
        tx.from_addr = users[rng.next_index(users.size())];
      }
      draw_fee_fields(tx, 1.0);
      tx.gas_used = 21000.0 + u01_open(rng) * 250000.0;
      tx.value_wei = u01_open(rng) < 0.4
                         ? 0.0
                         : std::exp(-1.0 + 1.5 * normal_draw(rng)) * kWeiPerEth;
      observe(p, config.mempool_coverage);
      pending.push_back(std::move(p));
    }

    // Mempool cohort ranks (same rule the pipeline applies: rank observed
    // transactions of the block by first_seen, ties by hash).
    std::vector<std::pair<std::int64_t, std::size_t>> observed;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].observed) observed.emplace_back(pending[i].first_seen, i);
    }
    std::sort(observed.begin(), observed.end(),
              [&](const auto& a, const auto& b) {
                return std::tie(a.first, pending[a.second].tx.tx_hash) <
                       std::tie(b.first, pending[b.second].tx.tx_hash);
              });
    std::vector<int> mempool_bucket(pending.size(), 0);
    const double obs_denom = observed.size() > 1
                                 ? static_cast<double>(observed.size() - 1)
                                 : 1.0;
    for (std::size_t rank = 0; rank < observed.size(); ++rank) {
      mempool_bucket[observed[rank].second] =
          bucket_of(static_cast<double>(rank) / obs_denom, 4);
    }

    // Latent placement index of each regular transaction, at the true
    // parameters. The builder orders the block by latent value (smaller =
    // earlier), which realizes exactly n/4 transactions per positional
    // quartile; with the share-calibrated defaults the quartile of a
    // transaction follows the ordered-probit law at the configured truth.
    struct Ranked {
      double latent;
      std::size_t index;
      bool operator<(const Ranked& o) const {
        return std::tie(latent, index) < std::tie(o.latent, o.index);
      }
    };
    std::vector<Ranked> ranked;
    ranked.reserve(pending.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].is_leg) continue;
      const TxRecord& tx = pending[i].tx;
      const auto& beta = config.true_beta;
      double eta = 0;
      const int mb = mempool_bucket[i];
      if (mb >= 1 && mb <= 3) eta += beta(mb - 1);
      eta += beta(3) * tx.max_fee_per_gas;
      if (tx.to_addr) {
        const Address& to = *tx.to_addr;
        if (to[0] == 'd') eta += beta(4);
        if (to[0] == 'e') eta += beta(5);
        if (tx.from_addr[0] == 'd') eta += beta(6);
        if (tx.from_addr[0] == 'e') eta += beta(7);
      }
      ranked.push_back({eta + normal_draw(rng), i});
    }
    std::sort(ranked.begin(), ranked.end());

    // Quartile slot ranges cover [q*n/4, (q+1)*n/4); regular transactions
    // fill whatever legs left free, by latent rank across quartiles and
    // uniformly within a quartile.
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (pending[i].is_leg) pending[i].tx.block_index = pending[i].forced_slot;
    }
    std::vector<bool> occupied(static_cast<std::size_t>(n), false);
    for (int slot : leg_slots) occupied[static_cast<std::size_t>(slot)] = true;
    const int quarter = n / 4;
    std::size_t taken = 0;
    for (int q = 0; q < 4; ++q) {
      std::vector<int> free_slots;
      for (int s = q * quarter; s < (q + 1) * quarter; ++s) {
        if (!occupied[static_cast<std::size_t>(s)]) free_slots.push_back(s);
      }
      std::vector<std::size_t> group;
      group.reserve(free_slots.size());
      for (std::size_t j = 0; j < free_slots.size(); ++j) {
        group.push_back(ranked[taken++].index);
      }
      shuffle_in_place(group, rng);
      for (std::size_t j = 0; j < free_slots.size(); ++j) {
        pending[group[j]].tx.block_index = free_slots[j];
      }
    }

    BlockMeta meta;
    meta.block_number = block_number;
    meta.timestamp = block_ts;
    meta.tx_count = n;
    meta.base_fee_per_gas = base_fee;
    if (u01_open(rng) < config.p_mev_built) {
      meta.builder_addr = mevs[rng.next_index(mevs.size())];
      meta.mev_payment = 0.02 + std::fabs(0.13 + 0.08 * normal_draw(rng));
    }
    out.blocks.push_back(std::move(meta));

    for (auto& p : pending) {
      if (p.observed) {
        MempoolObs obs;
        obs.tx_hash = p.tx.tx_hash;
        obs.first_seen = p.first_seen;
        obs.region = "us-east";
        out.sightings.push_back(obs);
        if (u01_open(rng) < 0.3) {  // later sighting from a second region
          obs.region = "eu-west";
          obs.first_seen += 1 + static_cast<std::int64_t>(u01_open(rng) * 5000.0);
          out.sightings.push_back(obs);
        }
      }
      out.txs.push_back(std::move(p.tx));
    }
  }

  std::sort(out.txs.begin(), out.txs.end(), [](const TxRecord& a, const TxRecord& b) {
    return std::tie(a.block_number, a.block_index) <
           std::tie(b.block_number, b.block_index);
  });
  std::sort(out.sightings.begin(), out.sightings.end(),
            [](const MempoolObs& a, const MempoolObs& b) {
              return std::tie(a.first_seen, a.tx_hash, a.region) <
                     std::tie(b.first_seen, b.tx_hash, b.region);
            });
  return out;
}

void write_synth_files(const SynthDay& day, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  {
    csv::Writer w(dir + "/transactions.csv",
                  {"tx_hash", "block_number", "block_index", "from_addr", "to_addr",
                   "max_fee_per_gas_gwei", "max_priority_fee_per_gas_gwei",
                   "effective_gas_price_gwei", "gas_used", "value_wei",
                   "block_timestamp"});
    for (const auto& tx : day.txs) {
      w.row({tx.tx_hash, std::to_string(tx.block_number),
             std::to_string(tx.block_index), tx.from_addr,
             tx.to_addr ? *tx.to_addr : "", csv::fixed(tx.max_fee_per_gas, 6),
             csv::fixed(tx.max_priority_fee_per_gas, 6),
             csv::fixed(tx.effective_gas_price, 6), csv::fixed(tx.gas_used, 0),
             csv::fixed(tx.value_wei, 0), std::to_string(tx.block_timestamp)});
    }
  }
  {
    csv::Writer w(dir + "/blocks.csv",
                  {"block_number", "timestamp", "tx_count", "builder_addr",
                   "base_fee_per_gas_gwei", "mev_payment_eth"});
    for (const auto& b : day.blocks) {
      w.row({std::to_string(b.block_number), std::to_string(b.timestamp),
             std::to_string(b.tx_count), b.builder_addr ? *b.builder_addr : "",
             csv::fixed(b.base_fee_per_gas, 6), csv::fixed(b.mev_payment, 8)});
    }
  }
  {
    std::ofstream out(dir + "/mempool.jsonl");
    for (const auto& obs : day.sightings) {
      nlohmann::json line{{"tx_hash", obs.tx_hash},
                          {"first_seen_ms", obs.first_seen},
                          {"region", obs.region}};
      out << line.dump() << '\n';
    }
  }
  {
    nlohmann::json doc = nlohmann::json::object();
    for (const auto& [addr, names] : day.labels) doc[addr] = names;
    std::ofstream out(dir + "/labels.json");
    out << doc.dump(2) << '\n';
  }
  {
    csv::Writer w(dir + "/sandwiches.csv",
                  {"block_number", "front_hash", "victim_hash", "back_hash",
                   "cost_usd", "profit_usd"});
    for (const auto& s : day.sandwiches) {
      w.row({std::to_string(s.block_number), s.front_hash, s.victim_hash,
             s.back_hash, csv::fixed(s.cost_usd, 6), csv::fixed(s.profit_usd, 6)});
    }
  }
  {
    csv::Writer w(dir + "/prices.csv", {"date", "avg_gas_price_gwei", "eth_close_usd"});
    w.row({format_date(day.day), csv::fixed(day.price.avg_gas_price_gwei, 4),
           csv::fixed(day.price.eth_close_usd, 4)});
  }
}

}  // namespace mevcost::synth
