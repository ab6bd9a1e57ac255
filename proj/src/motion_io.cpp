#include "gesmatch/motion_io.hpp"

#include "gesmatch/error.hpp"

#include <Eigen/SVD>

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace gesmatch {

std::string_view channel_name(Channel c)
{
    switch (c) {
    case Channel::Xposition: return "Xposition";
    case Channel::Yposition: return "Yposition";
    case Channel::Zposition: return "Zposition";
    case Channel::Xrotation: return "Xrotation";
    case Channel::Yrotation: return "Yrotation";
    case Channel::Zrotation: return "Zrotation";
    }
    return "?";
}

namespace {

bool is_rotation(Channel c)
{
    return c == Channel::Xrotation || c == Channel::Yrotation || c == Channel::Zrotation;
}

int axis_of(Channel c)
{
    switch (c) {
    case Channel::Xposition:
    case Channel::Xrotation: return 0;
    case Channel::Yposition:
    case Channel::Yrotation: return 1;
    default: return 2;
    }
}

std::optional<Channel> parse_channel(std::string_view s)
{
    for (Channel c : {Channel::Xposition, Channel::Yposition, Channel::Zposition, Channel::Xrotation,
                      Channel::Yrotation, Channel::Zrotation}) {
        if (s == channel_name(c)) {
            return c;
        }
    }
    return std::nullopt;
}

[[noreturn]] void fail(std::size_t line, const std::string& what)
{
    throw DataError("bvh line " + std::to_string(line) + ": " + what);
}

// Whitespace token stream that remembers the line each token came from.
class Lexer {
public:
    explicit Lexer(std::istream& in)
    {
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') {
                line.pop_back();
            }
            lines_.push_back(std::move(line));
        }
    }

    bool next(std::string& token)
    {
        while (row_ < lines_.size()) {
            const std::string& s = lines_[row_];
            while (col_ < s.size() && std::isspace(static_cast<unsigned char>(s[col_]))) {
                ++col_;
            }
            if (col_ < s.size()) {
                std::size_t start = col_;
                while (col_ < s.size() && !std::isspace(static_cast<unsigned char>(s[col_]))) {
                    ++col_;
                }
                token.assign(s, start, col_ - start);
                token_line_ = row_ + 1;
                return true;
            }
            ++row_;
            col_ = 0;
        }
        return false;
    }

    std::string expect(const char* what)
    {
        std::string t;
        if (!next(t)) {
            fail(lines_.size(), std::string("unexpected end of file, expected ") + what);
        }
        return t;
    }

    double expect_number(const char* what)
    {
        std::string t = expect(what);
        return to_number(t, token_line_);
    }

    std::size_t line() const { return token_line_; }

    // Remaining lines after the current token's line, for frame rows.
    std::size_t rest_begin() const { return row_ + 1; }
    const std::vector<std::string>& lines() const { return lines_; }

    static double to_number(std::string_view t, std::size_t line)
    {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || ptr != t.data() + t.size()) {
            fail(line, "expected a number, got '" + std::string(t) + "'");
        }
        return v;
    }

private:
    std::vector<std::string> lines_;
    std::size_t row_ = 0;
    std::size_t col_ = 0;
    std::size_t token_line_ = 0;
};

void parse_joint(Lexer& lex, Skeleton& s, int parent, std::string name)
{
    const int index = static_cast<int>(s.joint_names.size());
    s.joint_names.push_back(std::move(name));
    s.parents.push_back(parent);
    s.offsets.emplace_back(Eigen::Vector3d::Zero());
    s.channels.emplace_back();
    s.end_sites.emplace_back();

    if (lex.expect("'{'") != "{") {
        fail(lex.line(), "expected '{'");
    }
    bool have_offset = false;
    for (;;) {
        std::string t = lex.expect("joint body");
        if (t == "}") {
            break;
        }
        if (t == "OFFSET") {
            Eigen::Vector3d o;
            for (int k = 0; k < 3; ++k) {
                o[k] = lex.expect_number("offset");
            }
            s.offsets[index] = o;
            have_offset = true;
        } else if (t == "CHANNELS") {
            const std::size_t line = lex.line();
            double n = lex.expect_number("channel count");
            if (n < 0 || n > 6 || n != std::floor(n)) {
                fail(line, "bad channel count");
            }
            for (int k = 0; k < static_cast<int>(n); ++k) {
                std::string tag = lex.expect("channel tag");
                auto c = parse_channel(tag);
                if (!c) {
                    fail(lex.line(), "unknown channel tag '" + tag + "'");
                }
                if (!is_rotation(*c) && parent != -1) {
                    fail(lex.line(), "position channel on non-root joint '" + s.joint_names[index] + "'");
                }
                s.channels[index].push_back(*c);
            }
        } else if (t == "JOINT") {
            std::string child = lex.expect("joint name");
            parse_joint(lex, s, index, std::move(child));
        } else if (t == "End") {
            if (lex.expect("'Site'") != "Site") {
                fail(lex.line(), "expected 'Site'");
            }
            if (lex.expect("'{'") != "{" || lex.expect("OFFSET") != "OFFSET") {
                fail(lex.line(), "malformed End Site");
            }
            Eigen::Vector3d o;
            for (int k = 0; k < 3; ++k) {
                o[k] = lex.expect_number("end site offset");
            }
            if (lex.expect("'}'") != "}") {
                fail(lex.line(), "expected '}' after End Site");
            }
            s.end_sites[index] = o;
        } else {
            fail(lex.line(), "unexpected token '" + t + "'");
        }
    }
    if (!have_offset) {
        fail(lex.line(), "joint '" + s.joint_names[index] + "' has no OFFSET");
    }
}

// Quarter turns are exact so that axis-aligned poses round-trip without noise.
void sincos_degrees(double degrees, double& s, double& c)
{
    double r = std::fmod(degrees, 360.0);
    if (r < 0.0) {
        r += 360.0;
    }
    if (r == 0.0) {
        s = 0.0, c = 1.0;
    } else if (r == 90.0) {
        s = 1.0, c = 0.0;
    } else if (r == 180.0) {
        s = 0.0, c = -1.0;
    } else if (r == 270.0) {
        s = -1.0, c = 0.0;
    } else {
        const double rad = degrees * std::numbers::pi / 180.0;
        s = std::sin(rad);
        c = std::cos(rad);
    }
}

Eigen::Matrix3d axis_rotation(int axis, double degrees)
{
    double s = 0.0;
    double c = 1.0;
    sincos_degrees(degrees, s, c);
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    r(a, a) = c;
    r(a, b) = -s;
    r(b, a) = s;
    r(b, b) = c;
    return r;
}

void append_number(std::string& out, double v)
{
    if (v == 0.0) {
        v = 0.0; // drop negative zero
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out += buf;
}

void emit_joint(const MotionSequence& m, std::size_t j, int depth, std::string& out)
{
    const Skeleton& s = *m.skeleton;
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    out += indent;
    out += s.parents[j] < 0 ? "ROOT " : "JOINT ";
    out += s.joint_names[j];
    out += "\n" + indent + "{\n" + indent + "  OFFSET ";
    for (int k = 0; k < 3; ++k) {
        append_number(out, s.offsets[j][k]);
        out += k < 2 ? " " : "\n";
    }
    out += indent + "  CHANNELS " + std::to_string(s.channels[j].size());
    for (Channel c : s.channels[j]) {
        out += " ";
        out += channel_name(c);
    }
    out += "\n";
    for (std::size_t c = 0; c < s.joint_count(); ++c) {
        if (s.parents[c] == static_cast<int>(j)) {
            emit_joint(m, c, depth + 1, out);
        }
    }
    if (s.end_sites[j]) {
        out += indent + "  End Site\n" + indent + "  {\n" + indent + "    OFFSET ";
        for (int k = 0; k < 3; ++k) {
            append_number(out, (*s.end_sites[j])[k]);
            out += k < 2 ? " " : "\n";
        }
        out += indent + "  }\n";
    }
    out += indent + "}\n";
}

// Euler angles (degrees) for the joint's rotation channels, in channel order.
std::vector<double> matrix_to_euler(const Eigen::Matrix3d& r, const std::vector<Channel>& channels,
                                    const std::string& joint)
{
    std::vector<int> axes;
    for (Channel c : channels) {
        if (is_rotation(c)) {
            axes.push_back(axis_of(c));
        }
    }
    if (axes.empty()) {
        return {};
    }
    if (axes.size() != 3 || axes[0] == axes[1] || axes[1] == axes[2] || axes[0] == axes[2]) {
        throw DataError("cannot emit rotation of joint '" + joint + "': needs three distinct rotation channels");
    }
    Eigen::Vector3d a = r.eulerAngles(axes[0], axes[1], axes[2]);
    const double to_deg = 180.0 / std::numbers::pi;
    return {a[0] * to_deg, a[1] * to_deg, a[2] * to_deg};
}

} // namespace

int Skeleton::find(std::string_view name) const
{
    for (std::size_t i = 0; i < joint_names.size(); ++i) {
        if (joint_names[i] == name) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

int Skeleton::root() const
{
    for (std::size_t i = 0; i < parents.size(); ++i) {
        if (parents[i] < 0) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

void Skeleton::validate() const
{
    const std::size_t n = joint_names.size();
    if (n == 0) {
        throw DataError("skeleton has no joints");
    }
    if (parents.size() != n || offsets.size() != n || channels.size() != n || end_sites.size() != n) {
        throw DataError("skeleton field sizes disagree");
    }
    int roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (parents[i] < 0) {
            ++roots;
            if (parents[i] != -1) {
                throw DataError("joint '" + joint_names[i] + "' has invalid parent");
            }
        } else if (static_cast<std::size_t>(parents[i]) >= i) {
            // Parents precede children, which also rules out cycles.
            throw DataError("joint '" + joint_names[i] + "' listed before its parent");
        }
        if (!offsets[i].allFinite()) {
            throw DataError("joint '" + joint_names[i] + "' has a non-finite offset");
        }
    }
    if (roots != 1) {
        throw DataError("skeleton must have exactly one root, found " + std::to_string(roots));
    }
}

Eigen::Matrix3d MotionSequence::rotation(std::size_t frame, std::size_t joint) const
{
    Eigen::Matrix3d r;
    const auto row = static_cast<Eigen::Index>(frame);
    const auto base = static_cast<Eigen::Index>(joint * 9);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            r(a, b) = rotations(row, base + a * 3 + b);
        }
    }
    return r;
}

void MotionSequence::set_rotation(std::size_t frame, std::size_t joint, const Eigen::Matrix3d& r)
{
    const auto row = static_cast<Eigen::Index>(frame);
    const auto base = static_cast<Eigen::Index>(joint * 9);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            rotations(row, base + a * 3 + b) = r(a, b);
        }
    }
}

MotionSequence MotionSequence::identity(std::shared_ptr<const Skeleton> skeleton, std::size_t frames, double fps)
{
    MotionSequence m;
    m.fps = fps;
    const std::size_t joints = skeleton->joint_count();
    m.rotations = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(joints * 9));
    for (std::size_t j = 0; j < joints; ++j) {
        for (int a = 0; a < 3; ++a) {
            m.rotations.col(static_cast<Eigen::Index>(j * 9 + a * 4)).setOnes();
        }
    }
    m.root_positions = Eigen::MatrixX3d::Zero(static_cast<Eigen::Index>(frames), 3);
    m.skeleton = std::move(skeleton);
    return m;
}

Eigen::Matrix3d euler_to_matrix(std::span<const Channel> order, std::span<const double> degrees)
{
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    for (std::size_t i = 0; i < order.size() && i < degrees.size(); ++i) {
        r = r * axis_rotation(axis_of(order[i]), degrees[i]);
    }
    return r;
}

MotionSequence parse_bvh(std::istream& in)
{
    Lexer lex(in);
    auto skeleton = std::make_shared<Skeleton>();

    if (lex.expect("HIERARCHY") != "HIERARCHY") {
        fail(lex.line(), "expected HIERARCHY");
    }
    if (lex.expect("ROOT") != "ROOT") {
        fail(lex.line(), "expected ROOT");
    }
    parse_joint(lex, *skeleton, -1, lex.expect("root name"));
    skeleton->validate();

    if (lex.expect("MOTION") != "MOTION") {
        fail(lex.line(), "expected MOTION");
    }
    if (lex.expect("Frames:") != "Frames:") {
        fail(lex.line(), "expected 'Frames:'");
    }
    const std::size_t frames_line = lex.line();
    const double declared = lex.expect_number("frame count");
    if (declared < 1 || declared != std::floor(declared)) {
        fail(frames_line, "frame count must be a positive integer");
    }
    if (lex.expect("'Frame'") != "Frame" || lex.expect("'Time:'") != "Time:") {
        fail(lex.line(), "expected 'Frame Time:'");
    }
    const std::size_t time_line = lex.line();
    const double frame_time = lex.expect_number("frame time");
    if (!(frame_time > 0.0)) {
        fail(time_line, "frame time must be positive");
    }

    std::size_t total_channels = 0;
    for (const auto& ch : skeleton->channels) {
        total_channels += ch.size();
    }

    const auto frames = static_cast<std::size_t>(declared);
    const std::size_t joints = skeleton->joint_count();
    MotionSequence m;
    m.fps = 1.0 / frame_time;
    m.rotations.resize(static_cast<Eigen::Index>(frames), static_cast<Eigen::Index>(joints * 9));
    m.root_positions.resize(static_cast<Eigen::Index>(frames), 3);

    const int root = skeleton->root();
    std::vector<double> row;
    std::size_t frame = 0;
    const auto& lines = lex.lines();
    for (std::size_t li = lex.rest_begin(); li < lines.size(); ++li) {
        std::string_view text = lines[li];
        row.clear();
        std::size_t pos = 0;
        while (pos < text.size()) {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) {
                ++pos;
            }
            std::size_t start = pos;
            while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) {
                ++pos;
            }
            if (pos > start) {
                row.push_back(Lexer::to_number(text.substr(start, pos - start), li + 1));
            }
        }
        if (row.empty()) {
            continue;
        }
        if (row.size() != total_channels) {
            fail(li + 1, "frame has " + std::to_string(row.size()) + " values, expected " +
                             std::to_string(total_channels));
        }
        if (frame >= frames) {
            fail(li + 1, "more frame rows than the declared " + std::to_string(frames));
        }
        std::size_t k = 0;
        for (std::size_t j = 0; j < joints; ++j) {
            Eigen::Vector3d position = skeleton->offsets[j];
            std::vector<Channel> order;
            std::vector<double> angles;
            for (Channel c : skeleton->channels[j]) {
                if (is_rotation(c)) {
                    order.push_back(c);
                    angles.push_back(row[k]);
                } else {
                    position[axis_of(c)] = row[k];
                }
                ++k;
            }
            m.set_rotation(frame, j, euler_to_matrix(order, angles));
            if (static_cast<int>(j) == root) {
                m.root_positions.row(static_cast<Eigen::Index>(frame)) = position.transpose();
            }
        }
        ++frame;
    }
    if (frame != frames) {
        fail(frames_line, "declared " + std::to_string(frames) + " frames but found " + std::to_string(frame));
    }
    m.skeleton = std::move(skeleton);
    return m;
}

MotionSequence parse_bvh_string(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return parse_bvh(in);
}

MotionSequence load_bvh(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    try {
        return parse_bvh(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

std::string emit_bvh(const MotionSequence& m)
{
    const Skeleton& s = *m.skeleton;
    std::string out = "HIERARCHY\n";
    emit_joint(m, static_cast<std::size_t>(s.root()), 0, out);
    out += "MOTION\nFrames: " + std::to_string(m.frames()) + "\nFrame Time: ";
    append_number(out, 1.0 / m.fps);
    out += "\n";

    // Channel values are written in joint-declaration order, which is the
    // depth-first order emit_joint uses because parents precede children and
    // siblings keep their relative order.
    std::vector<std::size_t> order;
    std::vector<std::size_t> stack{static_cast<std::size_t>(s.root())};
    while (!stack.empty()) {
        std::size_t j = stack.back();
        stack.pop_back();
        order.push_back(j);
        for (std::size_t c = s.joint_count(); c-- > 0;) {
            if (s.parents[c] == static_cast<int>(j)) {
                stack.push_back(c);
            }
        }
    }

    for (std::size_t t = 0; t < m.frames(); ++t) {
        bool first = true;
        for (std::size_t j : order) {
            std::vector<double> angles = matrix_to_euler(m.rotation(t, j), s.channels[j], s.joint_names[j]);
            std::size_t a = 0;
            for (Channel c : s.channels[j]) {
                double v = is_rotation(c) ? angles[a++] : m.root_positions(static_cast<Eigen::Index>(t), axis_of(c));
                if (!first) {
                    out += ' ';
                }
                first = false;
                append_number(out, v);
            }
        }
        out += '\n';
    }
    return out;
}

void save_bvh(const std::string& path, const MotionSequence& m)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    out << emit_bvh(m);
}

PositionSequence forward_kinematics(const Skeleton& s, const MotionSequence& m)
{
    const std::size_t joints = s.joint_count();
    if (m.joints() != joints) {
        throw DataError("motion joint count does not match skeleton");
    }
    PositionSequence p;
    p.fps = m.fps;
    p.joints = joints;
    p.positions.resize(static_cast<Eigen::Index>(m.frames()), static_cast<Eigen::Index>(joints * 3));

    std::vector<Eigen::Matrix3d> global(joints);
    std::vector<Eigen::Vector3d> pos(joints);
    for (std::size_t t = 0; t < m.frames(); ++t) {
        for (std::size_t j = 0; j < joints; ++j) {
            const int parent = s.parents[j];
            const Eigen::Matrix3d local = m.rotation(t, j);
            if (parent < 0) {
                pos[j] = m.root_positions.row(static_cast<Eigen::Index>(t)).transpose();
                global[j] = local;
            } else {
                const auto pj = static_cast<std::size_t>(parent);
                pos[j] = pos[pj] + global[pj] * s.offsets[j];
                global[j] = global[pj] * local;
            }
            p.positions.block<1, 3>(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j * 3)) =
                pos[j].transpose();
        }
    }
    return p;
}

PositionSequence finite_difference(const PositionSequence& p, int order)
{
    if (order < 1 || order > 3) {
        throw UsageError("finite_difference order must be 1, 2 or 3");
    }
    const auto frames = static_cast<Eigen::Index>(p.frames());
    if (frames <= order) {
        throw DataError("finite_difference of order " + std::to_string(order) + " needs more than " +
                        std::to_string(order) + " frames, got " + std::to_string(frames));
    }
    static constexpr double kStencil[4][4] = {
        {0, 0, 0, 0},
        {-1, 1, 0, 0},
        {1, -2, 1, 0},
        {-1, 3, -3, 1},
    };
    const double scale = std::pow(p.fps, order);
    PositionSequence d;
    d.fps = p.fps;
    d.joints = p.joints;
    d.positions = Eigen::MatrixXd::Zero(frames - order, p.positions.cols());
    for (Eigen::Index t = 0; t + order < frames; ++t) {
        for (int k = 0; k <= order; ++k) {
            d.positions.row(t) += kStencil[order][k] * p.positions.row(t + k);
        }
    }
    d.positions *= scale;
    return d;
}

std::vector<std::string> default_upper_body_joints()
{
    return {"Spine",     "Spine1",        "Spine2",       "Spine3",   "Head",
            "Neck",      "Neck1",         "LeftShoulder", "RightShoulder", "LeftArm",
            "RightArm",  "LeftForeArm",   "RightForeArm", "LeftHand", "RightHand"};
}

std::vector<std::size_t> select_joints(const Skeleton& s, std::span<const std::string> names)
{
    std::vector<std::size_t> out;
    for (const auto& n : names) {
        int j = s.find(n);
        if (j >= 0) {
            out.push_back(static_cast<std::size_t>(j));
        }
    }
    if (out.empty()) {
        for (std::size_t j = 0; j < s.joint_count(); ++j) {
            out.push_back(j);
        }
    }
    return out;
}

Eigen::MatrixXd rotation_features(const MotionSequence& m, std::span<const std::size_t> joints)
{
    Eigen::MatrixXd f(static_cast<Eigen::Index>(m.frames()), static_cast<Eigen::Index>(joints.size() * 9));
    for (std::size_t i = 0; i < joints.size(); ++i) {
        f.middleCols(static_cast<Eigen::Index>(i * 9), 9) = m.rotations.middleCols(static_cast<Eigen::Index>(joints[i] * 9), 9);
    }
    return f;
}

FeatureNorm FeatureNorm::fit(const Eigen::MatrixXd& features)
{
    FeatureNorm n;
    const auto rows = features.rows();
    n.mean = features.colwise().mean().transpose();
    n.std.resize(features.cols());
    n.clamped.assign(static_cast<std::size_t>(features.cols()), false);
    for (Eigen::Index c = 0; c < features.cols(); ++c) {
        double var = rows > 0 ? (features.col(c).array() - n.mean[c]).square().sum() / static_cast<double>(rows) : 0.0;
        double s = std::sqrt(var);
        if (s < kMinStd) {
            s = kMinStd;
            n.clamped[static_cast<std::size_t>(c)] = true;
        }
        n.std[c] = s;
    }
    return n;
}

Eigen::MatrixXd FeatureNorm::apply(const Eigen::MatrixXd& features) const
{
    if (features.cols() != mean.size()) {
        throw DataError("feature width " + std::to_string(features.cols()) + " does not match normalization width " +
                        std::to_string(mean.size()));
    }
    Eigen::MatrixXd out = features.rowwise() - mean.transpose();
    out.array().rowwise() /= std.transpose().array();
    // A clamped channel is constant; its residual is numerical noise.
    for (std::size_t c = 0; c < clamped.size(); ++c) {
        if (clamped[c]) {
            auto col = out.col(static_cast<Eigen::Index>(c));
            for (Eigen::Index r = 0; r < col.size(); ++r) {
                if (std::abs(col[r]) * std[static_cast<Eigen::Index>(c)] < kMinStd) {
                    col[r] = 0.0;
                }
            }
        }
    }
    return out;
}

Eigen::MatrixXd FeatureNorm::invert(const Eigen::MatrixXd& normalized) const
{
    Eigen::MatrixXd out = normalized.array().rowwise() * std.transpose().array();
    out.rowwise() += mean.transpose();
    return out;
}

bool FeatureNorm::any_clamped() const
{
    for (bool c : clamped) {
        if (c) {
            return true;
        }
    }
    return false;
}

CanonicalMotion canonicalize_root(const MotionSequence& m)
{
    CanonicalMotion out{m, 0.0, false};
    const Skeleton& s = *m.skeleton;
    int left = s.find("LeftShoulder");
    int right = s.find("RightShoulder");
    if (left < 0 || right < 0) {
        left = s.find("LeftArm");
        right = s.find("RightArm");
    }
    if (left >= 0 && right >= 0 && m.frames() > 0) {
        MotionSequence first = m;
        first.rotations = m.rotations.topRows(1);
        first.root_positions = Eigen::MatrixX3d::Zero(1, 3);
        PositionSequence p = forward_kinematics(s, first);
        Eigen::Vector3d across = p.at(0, static_cast<std::size_t>(left)) - p.at(0, static_cast<std::size_t>(right));
        Eigen::Vector3d facing = across.cross(Eigen::Vector3d::UnitY());
        facing.y() = 0.0;
        if (facing.norm() > 1e-9) {
            out.facing_found = true;
            out.yaw_radians = std::atan2(facing.x(), facing.z());
        }
    }
    const int root = s.root();
    if (out.facing_found && out.yaw_radians != 0.0) {
        const Eigen::Matrix3d undo = axis_rotation(1, -out.yaw_radians * 180.0 / std::numbers::pi);
        for (std::size_t t = 0; t < m.frames(); ++t) {
            out.motion.set_rotation(t, static_cast<std::size_t>(root), undo * m.rotation(t, static_cast<std::size_t>(root)));
        }
    }
    out.motion.root_positions.setZero();
    return out;
}

NormalizedMotion normalize(const MotionSequence& m, std::span<const std::size_t> joints, const FeatureNorm* stats)
{
    if (m.frames() < 2) {
        throw DataError("normalize needs at least 2 frames");
    }
    CanonicalMotion c = canonicalize_root(m);
    Eigen::MatrixXd raw = rotation_features(c.motion, joints);
    NormalizedMotion n;
    n.norm = stats ? *stats : FeatureNorm::fit(raw);
    n.features = n.norm.apply(raw);
    n.yaw_radians = c.yaw_radians;
    n.facing_found = c.facing_found;
    return n;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m)
{
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) {
        u.col(2) *= -1.0;
    }
    return u * v.transpose();
}

} // namespace gesmatch
