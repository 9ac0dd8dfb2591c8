#pragma once

// Stochastic model of the probability that a packet of a size-s flow is
// favoured.
//
// Slow start sends bursts of 1, 2, 4, 8, ... packets starting at positions
// 1, 2, 4, 8, ... (position 1 is the SYN). Z = 1 means the queue already
// holds favoured packets when a burst arrives, so only the burst head is
// favoured; with Z = 0 up to three packets of each burst are.
//
//   phase 1 (s <= s1): flows are still in slow start.
//   phase 2 (s1 < s <= s2): flows leave slow start at a point k uniformly
//       spread over [s1, s2); after k each packet is favoured with
//       probability `plateau`.
//   phase 3 (s > s2): every flow has left slow start.

#include <cstdint>
#include <span>
#include <vector>

namespace favq {

struct FavourModelParams {
    std::int64_t s1 = 10;
    std::int64_t s2 = 100;
    double p_z1 = 0.25;
    double plateau = 0.70;

    /// Throws std::invalid_argument unless 1 <= s1 < s2 and both
    /// probabilities lie in [0, 1].
    void validate() const;
};

/// Favoured positions (1-based) not exceeding `up_to` for the given Z.
std::vector<std::int64_t> favoured_positions(int z, std::int64_t up_to);

/// Number of favoured positions <= s. s >= 1, z in {0, 1}.
std::int64_t favour_count_slowstart(std::int64_t s, int z);
/// favour_count_slowstart(s, z) / s.
double favour_prob_slowstart(std::int64_t s, int z);

/// Mixture over Z for s <= s1.
double favour_prob_phase1(std::int64_t s, const FavourModelParams& params);
/// Uniform exit mixture for s1 <= s <= s2 (equals phase 1 at s = s1).
double favour_prob_phase2(std::int64_t s, const FavourModelParams& params);
/// All flows exited, s >= s2 (equals phase 2 at s = s2).
double favour_prob_phase3(std::int64_t s, const FavourModelParams& params);
/// Dispatches on the phase of s.
double favour_prob(std::int64_t s, const FavourModelParams& params);

struct CurvePoint {
    std::int64_t size = 1;
    double probability = 0.0;
};

struct FitOptions {
    std::int64_t s1_min = 1;
    std::int64_t s1_max = 64;
    std::int64_t s2_max = 1000;
    double p_z1_step = 0.05;
};

struct FitResult {
    FavourModelParams params;
    double rmse = 0.0;
};

/// Exhaustive grid search over integer (s1, s2) and p_z1 in steps of
/// options.p_z1_step, minimising RMSE. The plateau is taken from `initial`.
/// Throws std::invalid_argument when the curve has fewer than three sizes.
FitResult fit_model(std::span<const CurvePoint> curve, const FavourModelParams& initial,
                    const FitOptions& options = {});

/// Root-mean-square error of the model against a curve.
double model_rmse(std::span<const CurvePoint> curve, const FavourModelParams& params);

}  // namespace favq
