#pragma once

#include "gesmatch/cli.hpp"
#include "gesmatch/database.hpp"
#include "gesmatch/matcher.hpp"
#include "gesmatch/random.hpp"
#include "oracles.hpp"

#include <filesystem>
#include <string>

namespace fixture {

/// Two-joint BVH: root with six channels, one child rotated 90 degrees about Z.
std::string quarter_turn_bvh();

/// Five-joint BVH with non-trivial offsets and three frames of mixed angles.
std::string small_bvh();

/// Single root joint, rotation channels only.
std::shared_ptr<const gesmatch::Skeleton> single_joint_skeleton();

struct ToyOptions {
    std::size_t max_clips = 4;
    std::size_t max_codes = 8;
    std::size_t max_steps = 6;
    std::uint32_t vocabulary = 3; // small, so distance ties are common
};

/// Randomized tiny database plus a query over it.
struct Toy {
    gesmatch::GestureDatabase db;
    gesmatch::MatchQuery query;
};

Toy random_toy(gesmatch::Rng& rng, const ToyOptions& opts = {});

/// The query's streams cut into per-step windows with the engine's window rules.
oracle::StepQuery step_windows(const gesmatch::GestureDatabase& db, const gesmatch::MatchQuery& q);

oracle::SearchSettings oracle_settings(const gesmatch::MatchQuery& q);

/// Database made of one clip cut from the query's own streams. Codes are
/// distinct and the codebook is equidistant; consecutive speech windows share
/// nothing while windows two steps apart share half their content.
Toy self_retrieval_toy(std::size_t steps, std::uint64_t seed);

/// Database of `clips` synthetic clips over a fixed codebook, for timing.
Toy scaling_toy(std::size_t clips, std::size_t codes, std::uint64_t seed);

/// Well-separated Gaussian clusters: `clusters` centers, `per_cluster` points each.
Eigen::MatrixXd clustered_points(std::size_t clusters, std::size_t per_cluster, std::size_t dim, std::uint64_t seed);

/// Small synthetic corpus: `sessions` recordings of `seconds` each.
std::vector<gesmatch::cli::SynthSession> small_corpus(std::size_t sessions, double seconds, std::uint64_t seed);

std::vector<gesmatch::SessionInput> session_inputs(const std::vector<gesmatch::cli::SynthSession>& corpus);

/// Codebook and latent basis fitted on the corpus the way the fit command does.
gesmatch::Model small_model(const std::vector<gesmatch::cli::SynthSession>& corpus, std::size_t codes,
                            std::size_t frames_per_code = 8, std::size_t phase_channels = 4);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

} // namespace fixture
