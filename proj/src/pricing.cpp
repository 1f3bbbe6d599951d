// Copyright 2026 The tollane Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tollane/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tollane/errors.hpp"

namespace tollane {

namespace {

constexpr double kTol = 1e-12;

std::size_t idx(int i) { return static_cast<std::size_t>(i); }

}  // namespace

VotDistribution::VotDistribution(std::vector<double> prices, std::vector<double> cdf)
    : prices_(std::move(prices)), cdf_(std::move(cdf)) {
  if (prices_.size() < 2 || prices_.size() != cdf_.size()) {
    throw Error(ErrorCode::InvalidArgument, "VoT distribution needs at least two matching knots");
  }
  if (prices_.front() != 0.0 || cdf_.front() != 0.0 || std::abs(cdf_.back() - 1.0) > kTol) {
    throw Error(ErrorCode::InvalidArgument, "VoT CDF must run from 0 at price 0 to 1");
  }
  for (std::size_t k = 1; k < prices_.size(); ++k) {
    if (!(prices_[k] > prices_[k - 1]) || !(cdf_[k] >= cdf_[k - 1])) {
      throw Error(ErrorCode::InvalidArgument,
                  "VoT knots need increasing prices and nondecreasing CDF values");
    }
  }
  cdf_.back() = 1.0;
}

VotDistribution VotDistribution::uniform(double max_price) {
  if (!(max_price > 0.0)) throw Error(ErrorCode::InvalidArgument, "max price must be positive");
  return VotDistribution({0.0, max_price}, {0.0, 1.0});
}

double VotDistribution::cdf(double price) const {
  if (price <= 0.0) return 0.0;
  if (price >= prices_.back()) return 1.0;
  const auto it = std::upper_bound(prices_.begin(), prices_.end(), price);
  const std::size_t k = static_cast<std::size_t>(it - prices_.begin());
  const double x0 = prices_[k - 1];
  const double x1 = prices_[k];
  return cdf_[k - 1] + (cdf_[k] - cdf_[k - 1]) * (price - x0) / (x1 - x0);
}

double VotDistribution::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile needs p in [0, 1]");
  if (p <= 0.0) return 0.0;
  for (std::size_t k = 1; k < prices_.size(); ++k) {
    if (cdf_[k] >= p) {
      const double rise = cdf_[k] - cdf_[k - 1];
      if (rise <= 0.0) return prices_[k - 1];
      const double x = prices_[k - 1] + (p - cdf_[k - 1]) / rise * (prices_[k] - prices_[k - 1]);
      return std::clamp(x, prices_[k - 1], prices_[k]);
    }
  }
  return prices_.back();
}

void VotDistribution::adjust(double price, double target, double weight) {
  target = std::clamp(target, 0.0, 1.0);
  weight = std::clamp(weight, 0.0, 1.0);
  if (!(price > 0.0 && price < prices_.back())) return;
  std::size_t nearest = 0;
  for (std::size_t k = 1; k < prices_.size(); ++k) {
    if (std::abs(prices_[k] - price) < std::abs(prices_[nearest] - price)) nearest = k;
  }
  const std::size_t last = prices_.size() - 1;
  if (nearest == 0 || nearest == last) {
    const double current = cdf(price);
    const auto it = std::upper_bound(prices_.begin(), prices_.end(), price);
    nearest = static_cast<std::size_t>(it - prices_.begin());
    prices_.insert(prices_.begin() + static_cast<std::ptrdiff_t>(nearest), price);
    cdf_.insert(cdf_.begin() + static_cast<std::ptrdiff_t>(nearest), current);
  }
  const double value = (1.0 - weight) * cdf_[nearest] + weight * target;
  cdf_[nearest] = value;
  for (std::size_t k = 1; k < nearest; ++k) cdf_[k] = std::min(cdf_[k], value);
  for (std::size_t k = nearest + 1; k + 1 < cdf_.size(); ++k) cdf_[k] = std::max(cdf_[k], value);
}

double vot_price(double general_share, const VotDistribution& dist) {
  if (!(general_share >= 0.0 && general_share <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "general-lane share must lie in [0, 1]");
  }
  if (general_share >= 1.0) return dist.max_price();
  return dist.quantile(general_share);
}

double time_saving(const TrafficState& s, const DualGeometry& g, int link, double min_speed_mph) {
  const auto& base = g.base;
  const int exit = base.exit_index();
  if (link < 1 || link > exit) throw Error(ErrorCode::InvalidArgument, "entrance link out of range");
  const LinkSignals sig = demands_supplies(s, g);
  double hours[2] = {0.0, 0.0};
  for (int grp = 0; grp < 2; ++grp) {
    for (int j = link; j <= exit; ++j) {
      const auto& l = base.link(j);
      double flow = sig.sending[idx(grp)][idx(j)];
      if (j < exit) flow = std::min(flow, sig.receiving[idx(grp)][idx(j + 1)]);
      const double outflow = flow / l.ramp.split_through();
      const double u = std::max(
          realized_speed(s.vehicles[idx(grp)][idx(j)], outflow, l, base.timestep_hours),
          min_speed_mph);
      hours[grp] += l.length_miles / u;
    }
  }
  return std::max(0.0, hours[kGeneralGroup] - hours[kTollGroup]);
}

double observed_tail(const TollObservation& obs, LaneMode mode) {
  if (!(obs.toll > 0.0)) throw Error(ErrorCode::InvalidArgument, "observation needs a positive toll");
  if (obs.revenue < 0.0 || obs.toll_vehicles < 0.0 || obs.general_vehicles < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "observation counts must be nonnegative");
  }
  const double paying = obs.revenue / obs.toll;
  double tail = 0.0;
  if (mode == LaneMode::Etl) {
    const double total = paying + obs.general_vehicles;
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "observation has no vehicles");
    tail = paying / total;
  } else {
    const double total = obs.toll_vehicles + obs.general_vehicles;
    if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "observation has no vehicles");
    tail = paying / total;
  }
  if (tail > 1.0 + kTol) {
    throw Error(ErrorCode::InconsistentObservation,
                "inferred paying vehicles exceed the observed total (tail mass " +
                    std::to_string(tail) + ")");
  }
  return std::min(tail, 1.0);
}

VotDistribution vot_update(const VotDistribution& dist, const TollObservation& obs, LaneMode mode,
                           double smoothing) {
  const double tail = observed_tail(obs, mode);
  VotDistribution out = dist;
  out.adjust(obs.price_per_hour, 1.0 - tail, smoothing);
  return out;
}

AuctionOutcome run_auction(const std::vector<double>& bids, double toll_share,
                           AuctionVariant variant, bool first_rejected_price) {
  if (!(toll_share >= 0.0 && toll_share <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "toll share must lie in [0, 1]");
  }
  const std::size_t h_total = bids.size();
  std::vector<std::size_t> order(h_total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return bids[a] > bids[b]; });

  const double target = toll_share * static_cast<double>(h_total);
  std::size_t h_star = 0;
  if (variant == AuctionVariant::Standard) {
    h_star = static_cast<std::size_t>(std::round(target));
  } else {
    const auto cap = static_cast<std::size_t>(std::floor(target + 1e-9));
    double best = 0.0;
    for (std::size_t h = 1; h <= std::min(cap, h_total); ++h) {
      const double value = static_cast<double>(h) * bids[order[h - 1]];
      if (value >= best) {
        best = value;
        h_star = h;
      }
    }
  }
  h_star = std::min(h_star, h_total);

  AuctionOutcome out;
  out.admitted_count = h_star;
  if (h_star == 0) return out;
  out.admitted.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h_star));
  if (first_rejected_price) {
    out.price = h_star < h_total ? bids[order[h_star]] : 0.0;
  } else {
    out.price = bids[order[h_star - 1]];
  }
  out.revenue = out.price * static_cast<double>(h_star);
  return out;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

TravelerSample sample_travelers(const VotDistribution& dist, double time_saving, std::size_t count,
                                std::mt19937_64& rng) {
  if (!(time_saving >= 0.0)) throw Error(ErrorCode::InvalidArgument, "time saving must be >= 0");
  TravelerSample out;
  out.vot.reserve(count);
  out.bids.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double v = dist.quantile(unit_uniform(rng));
    out.vot.push_back(v);
    out.bids.push_back(v * time_saving);
  }
  return out;
}

TravelerSample sample_travelers(const VotDistribution& dist, double time_saving, std::size_t count,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_travelers(dist, time_saving, count, rng);
}

VotPricer::VotPricer(VotDistribution belief, VotDistribution truth, VotPricerOptions options)
    : belief_(std::move(belief)), truth_(std::move(truth)), options_(options), rng_(options.seed) {}

PriceQuote VotPricer::quote(int link, double requested_share, double, const TrafficState& s,
                            const DualGeometry& g) {
  PriceQuote q;
  const double alpha = std::clamp(requested_share, 0.0, 1.0);
  q.price_per_hour = vot_price(1.0 - alpha, belief_);
  q.toll = q.price_per_hour * time_saving(s, g, link);
  if (options_.samples == 0) {
    q.toll_share = 1.0 - truth_.cdf(q.price_per_hour);
  } else {
    const TravelerSample t = sample_travelers(truth_, 0.0, options_.samples, rng_);
    const auto takers = std::count_if(t.vot.begin(), t.vot.end(), [&](double v) {
      return chooses_toll(v, q.price_per_hour);
    });
    q.toll_share = static_cast<double>(takers) / static_cast<double>(options_.samples);
  }
  // The top of the support means nobody pays; zero means everybody does.
  if (alpha <= 0.0) q.toll_share = 0.0;
  if (alpha >= 1.0) q.toll_share = 1.0;
  return q;
}

void VotPricer::settle(int, const PriceQuote& quote, double toll_entries, double general_entries) {
  if (!options_.calibrate) return;
  if (!(quote.toll > 0.0) || !(toll_entries + general_entries > 0.0)) return;
  if (!(quote.price_per_hour > 0.0 && quote.price_per_hour < belief_.max_price())) return;
  TollObservation obs;
  obs.revenue = quote.toll * toll_entries;
  obs.toll = quote.toll;
  obs.price_per_hour = quote.price_per_hour;
  obs.toll_vehicles = toll_entries;
  obs.general_vehicles = general_entries;
  belief_ = vot_update(belief_, obs, options_.mode, options_.smoothing);
  ++updates_;
}

AuctionPricer::AuctionPricer(VotDistribution truth, AuctionPricerOptions options)
    : truth_(std::move(truth)), options_(options), rng_(options.seed) {
  if (options_.bidders == 0) throw Error(ErrorCode::InvalidArgument, "auction needs bidders");
}

PriceQuote AuctionPricer::quote(int link, double requested_share, double, const TrafficState& s,
                                const DualGeometry& g) {
  PriceQuote q;
  const double alpha = std::clamp(requested_share, 0.0, 1.0);
  const double saving = time_saving(s, g, link);
  const TravelerSample t = sample_travelers(truth_, saving, options_.bidders, rng_);
  const AuctionOutcome a =
      run_auction(t.bids, alpha, options_.variant, options_.first_rejected_price);
  q.toll_share = static_cast<double>(a.admitted_count) / static_cast<double>(options_.bidders);
  q.toll = a.price;
  q.price_per_hour = saving > 0.0 ? a.price / saving : 0.0;
  return q;
}

}  // namespace tollane
