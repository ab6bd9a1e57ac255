#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gesmatch {

enum class Channel { Xposition, Yposition, Zposition, Xrotation, Yrotation, Zrotation };

std::string_view channel_name(Channel c);

struct Skeleton {
    std::vector<std::string> joint_names;
    std::vector<int> parents; // -1 for the root
    std::vector<Eigen::Vector3d> offsets;
    std::vector<std::vector<Channel>> channels;
    std::vector<std::optional<Eigen::Vector3d>> end_sites;

    std::size_t joint_count() const { return joint_names.size(); }

    /// Index of the joint with this name, or -1.
    int find(std::string_view name) const;

    /// Throws DataError unless the parents form a single rooted tree with
    /// parents listed before children and all offsets finite.
    void validate() const;

    int root() const;
};

/// Per-frame rotations of every joint as row-major 3x3 blocks.
///
/// `rotations` is frames x (joints * 9); block j of row t holds the local
/// rotation of joint j in frame t.
struct MotionSequence {
    double fps = 60.0;
    Eigen::MatrixXd rotations;
    Eigen::MatrixX3d root_positions;
    std::shared_ptr<const Skeleton> skeleton;

    std::size_t frames() const { return static_cast<std::size_t>(rotations.rows()); }
    std::size_t joints() const { return static_cast<std::size_t>(rotations.cols() / 9); }

    Eigen::Matrix3d rotation(std::size_t frame, std::size_t joint) const;
    void set_rotation(std::size_t frame, std::size_t joint, const Eigen::Matrix3d& r);

    static MotionSequence identity(std::shared_ptr<const Skeleton> skeleton, std::size_t frames, double fps);
};

struct PositionSequence {
    double fps = 60.0;
    std::size_t joints = 0;
    /// frames x (joints * 3), xyz per joint.
    Eigen::MatrixXd positions;

    std::size_t frames() const { return static_cast<std::size_t>(positions.rows()); }
    Eigen::Vector3d at(std::size_t frame, std::size_t joint) const
    {
        return positions.block<1, 3>(static_cast<Eigen::Index>(frame), static_cast<Eigen::Index>(joint * 3)).transpose();
    }
};

// --- BVH --------------------------------------------------------------------
//
// Euler channels are intrinsic rotations applied in the order the channels are
// listed for each joint: "Zrotation Xrotation Yrotation" gives R = Rz * Rx * Ry.
// Angles are in degrees. Root world position equals its position channels; a
// root without position channels sits at its OFFSET. Position channels on
// non-root joints are rejected.

MotionSequence parse_bvh(std::istream& in);
MotionSequence parse_bvh_string(std::string_view text);
MotionSequence load_bvh(const std::string& path);

std::string emit_bvh(const MotionSequence& m);
void save_bvh(const std::string& path, const MotionSequence& m);

/// Rotation for one Euler triple applied in the given channel order (degrees).
Eigen::Matrix3d euler_to_matrix(std::span<const Channel> order, std::span<const double> degrees);

// --- Kinematics -------------------------------------------------------------

PositionSequence forward_kinematics(const Skeleton& s, const MotionSequence& m);

/// Minimal-stencil difference of the given order scaled by fps^order.
/// Odd orders are centered on half-frames; the output has T - order frames.
PositionSequence finite_difference(const PositionSequence& p, int order);

// --- Normalization ------------------------------------------------------------

/// The 15 upper-body joints used for gesture features.
std::vector<std::string> default_upper_body_joints();

/// Indices of the named joints present in the skeleton, in name-list order.
/// Falls back to every joint when none of the names is present.
std::vector<std::size_t> select_joints(const Skeleton& s, std::span<const std::string> names);

/// Flattened rotation blocks of the selected joints: frames x (|joints| * 9).
Eigen::MatrixXd rotation_features(const MotionSequence& m, std::span<const std::size_t> joints);

struct FeatureNorm {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
    std::vector<bool> clamped;

    static constexpr double kMinStd = 1e-8;

    static FeatureNorm fit(const Eigen::MatrixXd& features);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;
    Eigen::MatrixXd invert(const Eigen::MatrixXd& normalized) const;
    bool any_clamped() const;
};

/// Root translation removed and the whole sequence yawed so that the
/// character faces +Z at frame 0.
struct CanonicalMotion {
    MotionSequence motion;
    double yaw_radians = 0.0;
    bool facing_found = false;
};

/// Facing = horizontal part of (left shoulder - right shoulder) x up, +Y up.
CanonicalMotion canonicalize_root(const MotionSequence& m);

struct NormalizedMotion {
    Eigen::MatrixXd features;
    FeatureNorm norm;
    double yaw_radians = 0.0;
    bool facing_found = false;
};

/// Canonicalizes the root, extracts the selected joints' rotation features and
/// z-scores them. With `stats` the given statistics are reused instead of
/// being fitted on this sequence.
NormalizedMotion normalize(const MotionSequence& m, std::span<const std::size_t> joints,
                           const FeatureNorm* stats = nullptr);

/// Nearest rotation in the Frobenius sense (polar decomposition).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

} // namespace gesmatch
