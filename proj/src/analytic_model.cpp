#include "favq/analytic_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

namespace favq {

void FavourModelParams::validate() const {
    if (s1 < 1 || s2 <= s1) throw std::invalid_argument("model params: need 1 <= s1 < s2");
    if (!(p_z1 >= 0.0 && p_z1 <= 1.0)) throw std::invalid_argument("model params: p_z1 outside [0,1]");
    if (!(plateau >= 0.0 && plateau <= 1.0)) {
        throw std::invalid_argument("model params: plateau outside [0,1]");
    }
}

namespace {

std::int64_t favoured_per_burst(std::int64_t burst, int z) {
    return z == 0 ? std::min<std::int64_t>(3, burst) : 1;
}

void check_z(int z) {
    if (z != 0 && z != 1) throw std::invalid_argument("z must be 0 or 1");
}

}  // namespace

std::vector<std::int64_t> favoured_positions(int z, std::int64_t up_to) {
    check_z(z);
    std::vector<std::int64_t> out;
    for (std::int64_t start = 1; start <= up_to; start *= 2) {
        const std::int64_t n = favoured_per_burst(start, z);
        for (std::int64_t i = 0; i < n && start + i <= up_to; ++i) out.push_back(start + i);
    }
    return out;
}

std::int64_t favour_count_slowstart(std::int64_t s, int z) {
    check_z(z);
    if (s < 1) throw std::invalid_argument("favour_count_slowstart: s must be >= 1");
    std::int64_t count = 0;
    // Burst j starts at 2^j and holds 2^j packets.
    for (std::int64_t start = 1; start <= s; start *= 2) {
        count += std::min(favoured_per_burst(start, z), s - start + 1);
    }
    return count;
}

double favour_prob_slowstart(std::int64_t s, int z) {
    return static_cast<double>(favour_count_slowstart(s, z)) / static_cast<double>(s);
}

namespace {

double mix(const FavourModelParams& p, double z0, double z1) {
    return (1.0 - p.p_z1) * z0 + p.p_z1 * z1;
}

// Expected favoured fraction of a size-s flow that left slow start at k.
double exited_at(std::int64_t k, std::int64_t s, int z, double plateau) {
    return (static_cast<double>(favour_count_slowstart(k, z)) +
            plateau * static_cast<double>(s - k)) /
           static_cast<double>(s);
}

}  // namespace

double favour_prob_phase1(std::int64_t s, const FavourModelParams& params) {
    params.validate();
    if (s < 1 || s > params.s1) throw std::domain_error("phase 1 needs 1 <= s <= s1");
    return mix(params, favour_prob_slowstart(s, 0), favour_prob_slowstart(s, 1));
}

double favour_prob_phase2(std::int64_t s, const FavourModelParams& params) {
    params.validate();
    if (s < params.s1 || s > params.s2) throw std::domain_error("phase 2 needs s1 <= s <= s2");
    const double width = static_cast<double>(params.s2 - params.s1);
    const double p_k = 1.0 / width;
    const double still_slow = static_cast<double>(params.s2 - s) / width;
    double by_z[2];
    for (int z = 0; z < 2; ++z) {
        double v = still_slow * favour_prob_slowstart(s, z);
        for (std::int64_t k = params.s1; k < s; ++k) v += p_k * exited_at(k, s, z, params.plateau);
        by_z[z] = v;
    }
    return mix(params, by_z[0], by_z[1]);
}

double favour_prob_phase3(std::int64_t s, const FavourModelParams& params) {
    params.validate();
    if (s < params.s2) throw std::domain_error("phase 3 needs s >= s2");
    const double p_k = 1.0 / static_cast<double>(params.s2 - params.s1);
    double by_z[2];
    for (int z = 0; z < 2; ++z) {
        double v = 0.0;
        for (std::int64_t k = params.s1; k < params.s2; ++k) {
            v += p_k * exited_at(k, s, z, params.plateau);
        }
        by_z[z] = v;
    }
    return mix(params, by_z[0], by_z[1]);
}

double favour_prob(std::int64_t s, const FavourModelParams& params) {
    if (s <= params.s1) return favour_prob_phase1(s, params);
    if (s <= params.s2) return favour_prob_phase2(s, params);
    return favour_prob_phase3(s, params);
}

double model_rmse(std::span<const CurvePoint> curve, const FavourModelParams& params) {
    if (curve.empty()) return 0.0;
    double sse = 0.0;
    for (const auto& pt : curve) {
        const double d = favour_prob(pt.size, params) - pt.probability;
        sse += d * d;
    }
    return std::sqrt(sse / static_cast<double>(curve.size()));
}

namespace {

// Closed-form evaluation for the grid search. prefix[z][n] = sum of counts
// over k = 1..n, so every curve point costs O(1) per (s1, s2).
class FastModel {
public:
    explicit FastModel(std::int64_t max_size) {
        for (int z = 0; z < 2; ++z) {
            prefix_[z].assign(static_cast<std::size_t>(max_size) + 1, 0.0);
            count_[z].assign(static_cast<std::size_t>(max_size) + 1, 0.0);
            for (std::int64_t k = 1; k <= max_size; ++k) {
                count_[z][k] = static_cast<double>(favour_count_slowstart(k, z));
                prefix_[z][k] = prefix_[z][k - 1] + count_[z][k];
            }
        }
    }

    // Model value for one z (no mixing).
    double value(std::int64_t s, int z, std::int64_t s1, std::int64_t s2, double plateau) const {
        const double sd = static_cast<double>(s);
        if (s <= s1) return count_[z][s] / sd;
        const double width = static_cast<double>(s2 - s1);
        if (s <= s2) {
            const double m = static_cast<double>(s - s1);
            const double exited = prefix_[z][s - 1] - prefix_[z][s1 - 1] + plateau * m * (m + 1) / 2.0;
            return exited / (width * sd) + (static_cast<double>(s2 - s) / width) * count_[z][s] / sd;
        }
        const double n = width;
        const double tail = n * sd - (static_cast<double>(s1 + s2 - 1)) * n / 2.0;
        return (prefix_[z][s2 - 1] - prefix_[z][s1 - 1] + plateau * tail) / (n * sd);
    }

private:
    std::vector<double> prefix_[2];
    std::vector<double> count_[2];
};

}  // namespace

FitResult fit_model(std::span<const CurvePoint> curve, const FavourModelParams& initial,
                    const FitOptions& options) {
    std::set<std::int64_t> sizes;
    for (const auto& pt : curve) {
        if (pt.size < 1) throw std::invalid_argument("fit_model: sizes must be >= 1");
        sizes.insert(pt.size);
    }
    if (sizes.size() < 3) throw std::invalid_argument("fit_model: curve needs at least three sizes");
    if (!(options.p_z1_step > 0.0 && options.p_z1_step <= 1.0)) {
        throw std::invalid_argument("fit_model: p_z1_step must be in (0, 1]");
    }

    const std::int64_t s1_hi = std::max(options.s1_min, options.s1_max);
    const std::int64_t s2_hi = std::max(options.s2_max, s1_hi + 1);
    const std::int64_t max_size = std::max(*sizes.rbegin(), s2_hi);
    const FastModel model(max_size);
    const double plateau = initial.plateau;

    std::vector<double> pz_grid;
    const int steps = static_cast<int>(std::llround(1.0 / options.p_z1_step));
    for (int i = 0; i <= steps; ++i) pz_grid.push_back(std::min(1.0, i * options.p_z1_step));

    const std::size_t n = curve.size();
    std::vector<double> a0(n), a1(n);
    FitResult best;
    best.rmse = std::numeric_limits<double>::infinity();
    for (std::int64_t s1 = std::max<std::int64_t>(1, options.s1_min); s1 <= s1_hi; ++s1) {
        for (std::int64_t s2 = s1 + 1; s2 <= s2_hi; ++s2) {
            for (std::size_t i = 0; i < n; ++i) {
                a0[i] = model.value(curve[i].size, 0, s1, s2, plateau);
                a1[i] = model.value(curve[i].size, 1, s1, s2, plateau);
            }
            for (double pz : pz_grid) {
                double sse = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = (1.0 - pz) * a0[i] + pz * a1[i] - curve[i].probability;
                    sse += d * d;
                }
                const double rmse = std::sqrt(sse / static_cast<double>(n));
                if (rmse < best.rmse) {
                    best.rmse = rmse;
                    best.params = FavourModelParams{s1, s2, pz, plateau};
                }
            }
        }
    }
    return best;
}

}  // namespace favq
