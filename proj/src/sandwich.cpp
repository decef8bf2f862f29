#include "mevcost/sandwich.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "mevcost/position.hpp"

namespace mevcost::sandwich {

JoinResult join_sandwiches(
    const std::vector<SandwichRecord>& records, const std::vector<TxRecord>& txs,
    const std::vector<BlockMeta>& blocks,
    const std::unordered_map<TxHash, std::int64_t>& mempool_first_seen) {
  std::unordered_map<TxHash, const TxRecord*> by_hash;
  by_hash.reserve(txs.size());
  std::map<std::int64_t, std::vector<TxRecord>> by_block;
  for (const auto& tx : txs) {
    by_hash.emplace(tx.tx_hash, &tx);
    by_block[tx.block_number].push_back(tx);
  }
  std::unordered_map<std::int64_t, double> mev_by_block;
  for (const auto& b : blocks) mev_by_block[b.block_number] = b.mev_payment;

  std::unordered_map<std::int64_t, std::int64_t> sandwiches_per_block;
  for (const auto& rec : records) ++sandwiches_per_block[rec.block_number];

  std::unordered_map<std::int64_t, std::unordered_map<TxHash, double>> block_pos;
  std::unordered_map<std::int64_t, std::unordered_map<TxHash, double>> pool_pos;

  auto positions_for = [&](std::int64_t block_number)
      -> std::pair<const std::unordered_map<TxHash, double>*,
                   const std::unordered_map<TxHash, double>*> {
    auto it = block_pos.find(block_number);
    if (it == block_pos.end()) {
      auto bt = by_block.find(block_number);
      if (bt == by_block.end()) return {nullptr, nullptr};
      block_pos[block_number] = normalize_block_positions(bt->second);
      pool_pos[block_number] = mempool_positions(bt->second, mempool_first_seen);
      it = block_pos.find(block_number);
    }
    return {&it->second, &pool_pos.at(block_number)};
  };

  JoinResult result;
  for (const auto& rec : records) {
    const TxRecord* front = nullptr;
    const TxRecord* victim = nullptr;
    const TxRecord* back = nullptr;
    if (auto it = by_hash.find(rec.front_hash); it != by_hash.end()) front = it->second;
    if (auto it = by_hash.find(rec.victim_hash); it != by_hash.end()) victim = it->second;
    if (auto it = by_hash.find(rec.back_hash); it != by_hash.end()) back = it->second;
    if (!front || !victim || !back || front->block_number != rec.block_number ||
        victim->block_number != rec.block_number ||
        back->block_number != rec.block_number) {
      ++result.dropped;
      continue;
    }
    auto [bpos, ppos] = positions_for(rec.block_number);
    if (!bpos) {
      ++result.dropped;
      continue;
    }
    auto fill = [&](const TxRecord& tx) {
      LegInfo leg;
      leg.hash = tx.tx_hash;
      leg.block_position = bpos->at(tx.tx_hash);
      if (auto it = ppos->find(tx.tx_hash); it != ppos->end()) {
        leg.mempool_position = it->second;
      }
      leg.gas_fee_eth = tx.gas_fee_eth();
      leg.max_priority_fee_gwei = tx.max_priority_fee_per_gas;
      leg.gas_used = tx.gas_used;
      return leg;
    };
    EnrichedSandwich es;
    es.record = rec;
    es.front = fill(*front);
    es.victim = fill(*victim);
    es.back = fill(*back);
    es.block_sandwich_count = sandwiches_per_block[rec.block_number];
    if (auto it = mev_by_block.find(rec.block_number); it != mev_by_block.end()) {
      es.block_mev_payment_eth = it->second;
    }
    es.day = day_from_timestamp(front->block_timestamp);
    result.enriched.push_back(std::move(es));
  }
  return result;
}

stats::TTestResult backrun_gas_test(const std::vector<EnrichedSandwich>& enriched,
                                    const std::vector<TxRecord>& all_txs, int sides) {
  std::set<TxHash> back_hashes;
  for (const auto& es : enriched) back_hashes.insert(es.back.hash);
  std::vector<double> back_fees, other_fees;
  back_fees.reserve(back_hashes.size());
  other_fees.reserve(all_txs.size());
  for (const auto& tx : all_txs) {
    if (back_hashes.count(tx.tx_hash)) {
      back_fees.push_back(tx.gas_fee_eth());
    } else {
      other_fees.push_back(tx.gas_fee_eth());
    }
  }
  return stats::welch_t_test(back_fees, other_fees, sides);
}

double aggregate_fee_usd(std::size_t count, double mean_fee_eth, double eth_usd) {
  return static_cast<double>(count) * mean_fee_eth * eth_usd;
}

std::string leg_name(Leg leg) {
  switch (leg) {
    case Leg::kFront: return "front_run";
    case Leg::kVictim: return "sandwich_middle";
    case Leg::kBack: return "back_run";
  }
  return "?";
}

std::vector<DisplacementRow> position_displacement(
    const std::vector<EnrichedSandwich>& enriched) {
  std::vector<DisplacementRow> rows;
  for (Leg leg : {Leg::kFront, Leg::kVictim, Leg::kBack}) {
    std::vector<double> pool, block;
    for (const auto& es : enriched) {
      const LegInfo& info = leg == Leg::kFront    ? es.front
                            : leg == Leg::kVictim ? es.victim
                                                  : es.back;
      if (!info.mempool_position) continue;
      pool.push_back(*info.mempool_position);
      block.push_back(info.block_position);
    }
    DisplacementRow row;
    row.leg = leg;
    row.n = pool.size();
    if (pool.size() >= 2) {
      auto t = stats::paired_t_test(pool, block);
      row.mean_mempool_position = t.mean_a;
      row.mean_block_position = t.mean_b;
      row.t_stat = t.t_stat;
      row.p_value = t.p_value;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<SandwichCandidate> detect_sandwiches_heuristic(
    const std::vector<TxRecord>& block_txs, std::int64_t window) {
  std::vector<TxRecord> ordered = block_txs;
  std::sort(ordered.begin(), ordered.end(),
            [](const TxRecord& a, const TxRecord& b) {
              return a.block_index < b.block_index;
            });
  std::vector<SandwichCandidate> out;
  const std::size_t n = ordered.size();
  for (std::size_t i = 0; i < n; ++i) {
    const TxRecord& front = ordered[i];
    if (!front.to_addr || front.value_wei <= 0) continue;
    for (std::size_t k = i + 2; k < n; ++k) {
      const TxRecord& back = ordered[k];
      if (back.block_index - front.block_index > window) break;
      if (back.from_addr != front.from_addr) continue;
      if (!back.to_addr || *back.to_addr != *front.to_addr) continue;
      if (back.value_wei >= front.value_wei) continue;  // no value reversal
      for (std::size_t j = i + 1; j < k; ++j) {
        const TxRecord& victim = ordered[j];
        if (victim.from_addr == front.from_addr) continue;
        if (!victim.to_addr || *victim.to_addr != *front.to_addr) continue;
        SandwichCandidate cand;
        cand.record.block_number = front.block_number;
        cand.record.front_hash = front.tx_hash;
        cand.record.victim_hash = victim.tx_hash;
        cand.record.back_hash = back.tx_hash;
        cand.front_index = front.block_index;
        cand.victim_index = victim.block_index;
        cand.back_index = back.block_index;
        cand.note = "same sender brackets, shared venue, value reversal";
        out.push_back(std::move(cand));
        break;  // one candidate per (front, back) pair
      }
    }
  }
  return out;
}

AmmCounterfactual amm_counterfactual(double front_in, double front_out,
                                     double victim_in, double victim_out,
                                     double fee_rate) {
  if (fee_rate < 0 || fee_rate > 0.01) {
    throw std::domain_error("amm_counterfactual: fee_rate outside [0, 0.01]");
  }
  if (victim_in <= 0 || victim_out <= 0) {
    throw std::domain_error("amm_counterfactual: victim swap must be positive");
  }
  AmmCounterfactual result;
  if (front_in <= 0 || front_out <= 0) {
    result.degenerate = true;
    result.counterfactual_out = victim_out;
    result.front_price_out = victim_out;
    return result;
  }

  const double eff_front = front_in * (1 - fee_rate);
  const double eff_victim = victim_in * (1 - fee_rate);

  // The predicted victim output approaches victim_in * front_out / front_in
  // from below as x grows; a victim filled at or above the front's average
  // price is inconsistent with a single constant-product pool.
  if (victim_out >= victim_in * front_out / front_in) {
    throw std::domain_error(
        "amm_counterfactual: no positive-reserve solution (victim price not "
        "worse than front-run price)");
  }

  // With y eliminated through the front swap, the predicted victim output
  // is strictly increasing in x; bisection is safe once bracketed.
  auto predicted_victim_out = [&](double x) {
    const double y = front_out * (x + eff_front) / eff_front;
    const double x_after = x + front_in;
    const double y_after = y - front_out;
    return y_after * eff_victim / (x_after + eff_victim);
  };

  double lo = front_in * 1e-12;
  double hi = std::max(front_in, victim_in);
  while (predicted_victim_out(hi) < victim_out) {
    hi *= 2;
    if (!std::isfinite(hi)) {
      throw std::domain_error("amm_counterfactual: no positive-reserve solution");
    }
  }
  if (predicted_victim_out(lo) > victim_out) {
    throw std::domain_error("amm_counterfactual: no positive-reserve solution");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (predicted_victim_out(mid) < victim_out) {
      lo = mid;
    } else {
      hi = mid;
    }
    if ((hi - lo) <= 1e-9 * hi) break;
  }
  const double x = 0.5 * (lo + hi);
  const double y = front_out * (x + eff_front) / eff_front;

  // Inferred reserves must reproduce both observed outputs before any
  // counterfactual is reported.
  const double check_front = y * eff_front / (x + eff_front);
  const double check_victim = predicted_victim_out(x);
  if (std::fabs(check_front - front_out) > 1e-6 * front_out ||
      std::fabs(check_victim - victim_out) > 1e-6 * victim_out) {
    throw std::domain_error("amm_counterfactual: inferred reserves fail to reproduce swaps");
  }

  result.reserve_eth = x;
  result.reserve_token = y;
  result.counterfactual_out = y * eff_victim / (x + eff_victim);
  result.harm = result.counterfactual_out - victim_out;
  result.front_price_out = victim_in * front_out / front_in;
  result.front_price_harm = result.front_price_out - victim_out;
  return result;
}

ProfitBreakdown sandwich_profit(double front_in_eth, double back_out_eth,
                                double costs_usd, double eth_usd) {
  ProfitBreakdown p;
  p.revenue_eth = back_out_eth - front_in_eth;
  p.revenue_usd = p.revenue_eth * eth_usd;
  p.costs_usd = costs_usd;
  p.net_usd = p.revenue_usd - costs_usd;
  return p;
}

FilterResult filter_high_effects(const std::vector<double>& per_obs_effects,
                                 double threshold) {
  FilterResult result;
  for (std::size_t i = 0; i < per_obs_effects.size(); ++i) {
    if (per_obs_effects[i] >= threshold) {
      result.kept.push_back(per_obs_effects[i]);
      result.kept_indices.push_back(i);
    }
  }
  result.retention = per_obs_effects.empty()
                         ? 0.0
                         : static_cast<double>(result.kept.size()) /
                               static_cast<double>(per_obs_effects.size());
  return result;
}

OLSFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
           const std::vector<std::string>& names) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n <= p) throw std::domain_error("ols: more parameters than observations");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < p) {
    std::string collinear;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < p; ++i) {
      Eigen::Index col = perm(i);
      if (!collinear.empty()) collinear += ", ";
      collinear += col < static_cast<Eigen::Index>(names.size())
                       ? names[static_cast<std::size_t>(col)]
                       : "x" + std::to_string(col);
    }
    throw std::domain_error("ols: rank-deficient design; collinear columns: " + collinear);
  }

  OLSFit fit;
  fit.names = names;
  fit.n_obs = n;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - x * fit.coefficients;

  const double rss = fit.residuals.squaredNorm();
  const double dof = static_cast<double>(n - p);
  const double sigma2 = rss / dof;
  Eigen::MatrixXd xtx_inv =
      (x.transpose() * x).ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.std_errors = (sigma2 * xtx_inv.diagonal()).cwiseSqrt();

  // HC1: (X'X)^-1 X' diag(e^2) X (X'X)^-1 scaled by n/(n-p).
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double e2 = fit.residuals(i) * fit.residuals(i);
    meat.noalias() += e2 * (x.row(i).transpose() * x.row(i));
  }
  Eigen::MatrixXd robust = xtx_inv * meat * xtx_inv * (static_cast<double>(n) / dof);
  fit.robust_std_errors = robust.diagonal().cwiseSqrt();

  const double tss = (y.array() - y.mean()).square().sum();
  fit.r_squared = tss > 0 ? 1.0 - rss / tss : 0.0;
  return fit;
}

OLSFit fit_effect_regression(const std::vector<EffectRegressionRow>& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, 7);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = r.sandwich_cost_usd;
    x(i, 2) = r.gas_fee_eth;
    x(i, 3) = r.block_sandwich_count;
    x(i, 4) = r.max_priority_fee_gwei;
    x(i, 5) = r.sandwich_profit_usd;
    x(i, 6) = r.mev_payment_eth;
    y(i) = r.effect;
  }
  return ols(x, y,
             {"intercept", "sandwich_cost_usd", "gas_fee_eth", "block_sandwiches",
              "max_priority_fee_gwei", "sandwich_profit_usd", "mev_payment_eth"});
}

}  // namespace mevcost::sandwich
