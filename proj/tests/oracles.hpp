#pragma once

// Independent reference implementations. Deliberately naive: full matrices,
// direct sums, explicit enumeration.

#include "gesmatch/database.hpp"
#include "gesmatch/motion_io.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

/// Full (|a|+1) x (|b|+1) edit-distance table.
std::size_t levenshtein_dp(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

/// X_j = sum_n x_n exp(-2 pi i j n / T).
std::vector<std::complex<double>> dft(std::span<const double> x);

struct Periodic {
    double amplitude = 0.0;
    double frequency = 0.0;
    double offset = 0.0;
};

/// Amplitude, frequency and offset from the power spectrum via direct DFT.
Periodic periodic_dft(std::span<const double> x, double seconds);

/// World joint positions from 4x4 homogeneous transforms, one joint at a time.
gesmatch::PositionSequence fk_homogeneous(const gesmatch::Skeleton& s, const gesmatch::MotionSequence& m);

/// #{j : v_j < v_i} / (n - 1).
std::vector<double> relrank_count(std::span<const double> v);

/// Query streams already cut into per-step windows.
struct StepQuery {
    std::vector<std::vector<std::uint32_t>> audio; // per step
    std::vector<Eigen::VectorXd> text;             // per step
};

struct SearchSettings {
    std::uint32_t initial_code = 0;
    Eigen::MatrixXd initial_phase;
    std::vector<bool> step_mask;
    std::vector<bool> allowed_codes;
    std::size_t k = 1;
    double freq_weight = 0.0;
};

/// Exhaustive search: for every step, every (code, occurrence) pair is scored
/// and the full candidate list is sorted.
std::vector<std::uint32_t> search_exhaustive(const gesmatch::GestureDatabase& db, const StepQuery& q,
                                             const SearchSettings& s);

} // namespace oracle
