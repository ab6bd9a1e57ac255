#include "fixtures.hpp"
#include "gesmatch/binary_io.hpp"
#include "gesmatch/database.hpp"
#include "gesmatch/error.hpp"

#include <doctest.h>

#include <map>
#include <string>

using namespace gesmatch;
namespace fs = std::filesystem;

namespace {

std::vector<WordTiming> timings(std::initializer_list<std::pair<double, double>> spans)
{
    std::vector<WordTiming> out;
    for (const auto& [a, b] : spans) {
        out.push_back({"w" + std::to_string(out.size()), a, b});
    }
    return out;
}

std::map<std::string, std::string> directory_bytes(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), dir).string()] = binary::read_text(e.path());
        }
    }
    return out;
}

struct Corpus {
    std::vector<cli::SynthSession> sessions;
    Model model;
};

const Corpus& corpus()
{
    static const Corpus c = [] {
        Corpus out;
        out.sessions = fixture::small_corpus(2, 8.0, 3);
        out.model = fixture::small_model(out.sessions, 24);
        return out;
    }();
    return c;
}

DatabaseSettings small_settings()
{
    DatabaseSettings s;
    s.fps = 60.0;
    return s;
}

} // namespace

TEST_CASE("word timings")
{
    const auto words = parse_word_timings("# comment\nhello 0.1 0.4\n\nworld 0.5 0.9\n");
    REQUIRE(words.size() == 2);
    CHECK(words[1].word == "world");
    CHECK(words[1].end == doctest::Approx(0.9));
    CHECK(parse_word_timings(format_word_timings(words)).size() == 2);

    CHECK_THROWS_WITH_AS(parse_word_timings("a 0 1\nb 2\n", "x.words"), "x.words line 2: expected 'word start end'",
                         DataError);
    CHECK_THROWS_AS(parse_word_timings("a 1 2\nb 0.5 3\n"), DataError);
    CHECK_THROWS_AS(parse_word_timings("a 2 1\n"), DataError);
}

TEST_CASE("clips split at long pauses")
{
    // Gaps of 0.2, 0.9 and 0.3 seconds: one split.
    const auto words = timings({{0.0, 0.5}, {0.7, 1.0}, {1.9, 2.2}, {2.5, 2.8}});
    const auto spans = split_clips(600, 60.0, 8, words);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0].first_word == 0);
    CHECK(spans[0].word_count == 2);
    CHECK(spans[1].first_word == 2);
    CHECK(spans[1].word_count == 2);
    for (const auto& s : spans) {
        CHECK(s.start_frame % 8 == 0);
        CHECK(s.end_frame % 8 == 0);
        CHECK(s.end_frame > s.start_frame);
    }
    CHECK(spans[0].end_frame <= spans[1].start_frame);

    CHECK(split_clips(600, 60.0, 8, timings({{0.0, 0.5}, {0.6, 1.0}, {1.3, 2.0}})).size() == 1);
    // A gap of exactly the threshold does not split.
    CHECK(split_clips(600, 60.0, 8, timings({{0.0, 0.5}, {1.0, 1.5}})).size() == 1);

    const auto whole = split_clips(245, 60.0, 8, {});
    REQUIRE(whole.size() == 1);
    CHECK(whole[0].start_frame == 0);
    CHECK(whole[0].end_frame == 240);
}

TEST_CASE("building a database")
{
    const Corpus& c = corpus();
    auto inputs = fixture::session_inputs(c.sessions);

    SUBCASE("a recording without words is one clip")
    {
        std::vector<SessionInput> one{inputs[0]};
        one[0].words.clear();
        one[0].motion.rotations.conservativeResize(245, Eigen::NoChange);
        one[0].motion.root_positions.conservativeResize(245, Eigen::NoChange);
        const GestureDatabase db = build_database(one, c.model, small_settings());
        REQUIRE(db.clips.size() == 1);
        CHECK(db.clips[0].steps() == 30);
        CHECK(db.occurrence_count() == 30);
        CHECK(db.clips[0].audio_windows.size() == 30);
        CHECK(db.phase_window(0, 3).rows() == 8);
        CHECK(db.phase_window(0, 3).cols() == 8);
        CHECK(db.clips[0].audio_windows[10].size() == 25);
    }
    SUBCASE("codes match encoding the clip frames")
    {
        const GestureDatabase db = build_database(inputs, c.model, small_settings());
        REQUIRE_FALSE(db.clips.empty());
        const auto joints = c.model.codebook.joints;
        const ClipRecord& clip = db.clips.back();
        const auto& source = c.sessions.back();
        const Eigen::MatrixXd f = c.model.codebook.norm.apply(
            rotation_features(canonicalize_root(source.motion).motion, joints));
        const Eigen::MatrixXd w = segment_windows(
            f.middleRows(static_cast<Eigen::Index>(clip.start_frame), static_cast<Eigen::Index>(clip.steps() * 8)), 8);
        CHECK(encode(w, c.model.codebook).codes == clip.codes);
    }
    SUBCASE("duplicated recordings double every frequency")
    {
        std::vector<SessionInput> one{inputs[0]};
        std::vector<SessionInput> two{inputs[0], inputs[0]};
        two[1].id = "copy";
        const GestureDatabase a = build_database(one, c.model, small_settings());
        const GestureDatabase b = build_database(two, c.model, small_settings());
        REQUIRE(a.code_frequency.size() == b.code_frequency.size());
        for (std::size_t i = 0; i < a.code_frequency.size(); ++i) {
            CHECK(b.code_frequency[i] == 2 * a.code_frequency[i]);
        }
        CHECK(b.clips.size() == 2 * a.clips.size());
    }
    SUBCASE("mismatched frame rate names the recording")
    {
        inputs[1].motion.fps = 30.0;
        const std::string expected = inputs[1].id + ": motion fps";
        CHECK_THROWS_WITH_AS(build_database(inputs, c.model, small_settings()), doctest::Contains(expected.c_str()),
                             DataError);
    }
    SUBCASE("frame rates within tolerance are accepted")
    {
        inputs[1].motion.fps = 1.0 / 0.0166667;
        CHECK_NOTHROW(build_database(inputs, c.model, small_settings()));
    }
    SUBCASE("embedding dimensions must agree")
    {
        inputs[1].text.vectors.conservativeResize(Eigen::NoChange, 3);
        CHECK_THROWS_AS(build_database(inputs, c.model, small_settings()), DataError);
    }
    SUBCASE("tokens outside the vocabulary")
    {
        inputs[0].audio.vocabulary = 10;
        CHECK_THROWS_WITH_AS(build_database(inputs, c.model, small_settings()), doctest::Contains(inputs[0].id.c_str()),
                             DataError);
    }
}

TEST_CASE("database persistence")
{
    const Corpus& c = corpus();
    const auto inputs = fixture::session_inputs(c.sessions);
    const GestureDatabase db = build_database(inputs, c.model, small_settings());

    const fs::path root = fixture::temp_dir("database");
    save_database(db, root / "a");
    const GestureDatabase loaded = load_database(root / "a");
    save_database(loaded, root / "b");
    CHECK(directory_bytes(root / "a") == directory_bytes(root / "b"));

    // Building again from the same inputs also reproduces the files.
    save_database(build_database(inputs, c.model, small_settings()), root / "c");
    CHECK(directory_bytes(root / "a") == directory_bytes(root / "c"));

    CHECK(loaded.code_frequency == db.code_frequency);
    CHECK(loaded.embedding_dim == db.embedding_dim);
    CHECK(loaded.joint_names == db.joint_names);
    CHECK(loaded.settings.n_phase == db.settings.n_phase);
    CHECK(loaded.codebook.centers.cast<float>() == db.codebook.centers.cast<float>());
    REQUIRE(loaded.clips.size() == db.clips.size());
    for (std::size_t i = 0; i < db.clips.size(); ++i) {
        CHECK(loaded.clips[i].id == db.clips[i].id);
        CHECK(loaded.clips[i].codes == db.clips[i].codes);
        CHECK(loaded.clips[i].audio_windows == db.clips[i].audio_windows);
        CHECK(loaded.clips[i].text == db.clips[i].text);
        CHECK(loaded.clips[i].phases == db.clips[i].phases);
        CHECK(loaded.clips[i].words.size() == db.clips[i].words.size());
    }

    save_model(c.model, root / "model");
    const Model model = load_model(root / "model");
    CHECK(model.joint_names == c.model.joint_names);
    CHECK(model.skeleton->joint_names == c.model.skeleton->joint_names);

    SUBCASE("tampered manifests are rejected")
    {
        const fs::path manifest = root / "a" / "manifest.json";
        std::string text = binary::read_text(manifest);
        text.replace(text.find("gesmatch-db/1"), 13, "gesmatch-db/9");
        binary::write_text(manifest, text);
        CHECK_THROWS_AS(load_database(root / "a"), DataError);
    }
    SUBCASE("missing directories")
    {
        CHECK_THROWS(load_database(root / "nowhere"));
    }
}

TEST_CASE("validation catches inconsistent tables")
{
    const Corpus& c = corpus();
    GestureDatabase db = build_database(fixture::session_inputs(c.sessions), c.model, small_settings());
    CHECK_NOTHROW(db.validate());
    db.code_frequency[db.clips[0].codes[0]] += 1;
    CHECK_THROWS_AS(db.validate(), DataError);
    db.code_frequency = count_codes(db.clips, db.codebook.size());
    db.clips[0].audio_windows.pop_back();
    CHECK_THROWS_AS(db.validate(), DataError);
}
