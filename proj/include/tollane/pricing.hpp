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

#pragma once

// Tolls as actuators: value-of-time inversion with online calibration, the
// bid auction, and a seeded traveler model for closed-loop runs.

#include <cstdint>
#include <random>
#include <vector>

#include "tollane/core.hpp"
#include "tollane/sim.hpp"

namespace tollane {

/// Piecewise-linear cumulative distribution of the value of time over
/// [0, max_price] (currency per hour).
class VotDistribution {
 public:
  /// Knots must start at price 0 with CDF 0, end with CDF 1, have strictly
  /// increasing prices and nondecreasing CDF values.
  VotDistribution(std::vector<double> prices, std::vector<double> cdf);
  static VotDistribution uniform(double max_price);

  double cdf(double price) const;
  /// Smallest price whose CDF reaches `p`.
  double quantile(double p) const;
  double max_price() const { return prices_.back(); }
  const std::vector<double>& prices() const { return prices_; }
  const std::vector<double>& cdf_values() const { return cdf_; }

  /// Moves the CDF toward `target` at `price` (nearest interior knot, or a
  /// new knot when the nearest is a boundary), then restores monotonicity.
  void adjust(double price, double target, double weight);

 private:
  std::vector<double> prices_;
  std::vector<double> cdf_;
};

/// Price per hour that leaves the fraction `general_share` in the general lanes.
double vot_price(double general_share, const VotDistribution& dist);

inline constexpr double kMinSpeedMph = 5.0;

/// Travel time difference (hours) between the general and toll lane groups
/// from entrance link `link` to the exit, estimated from the state alone.
double time_saving(const TrafficState& s, const DualGeometry& g, int link,
                   double min_speed_mph = kMinSpeedMph);

struct TollQuote {
  double price_per_hour = 0.0;  // pi*
  double time_saving = 0.0;     // hours
  double toll = 0.0;            // pi* x time saving
};

enum class LaneMode { Etl, Hot };

struct TollObservation {
  double revenue = 0.0;            // T
  double toll = 0.0;               // pi* x time saving
  double price_per_hour = 0.0;     // pi*
  double toll_vehicles = 0.0;      // n^1 (used in HOT mode)
  double general_vehicles = 0.0;   // n^2
};

inline constexpr double kDefaultSmoothing = 0.1;

/// Fraction of travelers at or above pi* implied by the observation. Throws
/// Error(InconsistentObservation) when it exceeds one.
double observed_tail(const TollObservation& obs, LaneMode mode);

VotDistribution vot_update(const VotDistribution& dist, const TollObservation& obs, LaneMode mode,
                           double smoothing = kDefaultSmoothing);

enum class AuctionVariant { Standard, RevenueMax };

struct AuctionOutcome {
  std::size_t admitted_count = 0;    // h*
  double price = 0.0;
  double revenue = 0.0;
  std::vector<std::size_t> admitted;  // indices into the original bid list
};

/// Bids are ranked in descending order (stable for equal bids). With
/// `first_rejected_price`, admitted bidders pay the highest rejected bid.
AuctionOutcome run_auction(const std::vector<double>& bids, double toll_share,
                           AuctionVariant variant = AuctionVariant::Standard,
                           bool first_rejected_price = false);

/// Uniform draw in [0, 1) from the top 53 bits.
double unit_uniform(std::mt19937_64& rng);

struct TravelerSample {
  std::vector<double> vot;   // currency per hour
  std::vector<double> bids;  // vot x time saving
};

TravelerSample sample_travelers(const VotDistribution& dist, double time_saving, std::size_t count,
                                std::uint64_t seed);
TravelerSample sample_travelers(const VotDistribution& dist, double time_saving, std::size_t count,
                                std::mt19937_64& rng);

/// A traveler takes the toll lane when the value of time meets the price.
inline bool chooses_toll(double vot, double price_per_hour) { return vot >= price_per_hour; }

struct VotPricerOptions {
  bool calibrate = false;
  double smoothing = kDefaultSmoothing;
  LaneMode mode = LaneMode::Etl;
  std::size_t samples = 0;  // 0: travelers respond as a continuum
  std::uint64_t seed = 0;
};

/// Quotes pi* from a believed distribution; travelers respond according to
/// the true distribution.
class VotPricer : public Pricer {
 public:
  VotPricer(VotDistribution belief, VotDistribution truth, VotPricerOptions options = {});
  PriceQuote quote(int link, double requested_share, double ramp_demand, const TrafficState& s,
                   const DualGeometry& g) override;
  void settle(int link, const PriceQuote& quote, double toll_entries,
              double general_entries) override;
  const VotDistribution& belief() const { return belief_; }
  std::size_t updates() const { return updates_; }

 private:
  VotDistribution belief_;
  VotDistribution truth_;
  VotPricerOptions options_;
  std::mt19937_64 rng_;
  std::size_t updates_ = 0;
};

struct AuctionPricerOptions {
  AuctionVariant variant = AuctionVariant::Standard;
  bool first_rejected_price = false;
  std::size_t bidders = 100;  // bids drawn per entrance and step
  std::uint64_t seed = 0;
};

class AuctionPricer : public Pricer {
 public:
  AuctionPricer(VotDistribution truth, AuctionPricerOptions options = {});
  PriceQuote quote(int link, double requested_share, double ramp_demand, const TrafficState& s,
                   const DualGeometry& g) override;

 private:
  VotDistribution truth_;
  AuctionPricerOptions options_;
  std::mt19937_64 rng_;
};

}  // namespace tollane
