#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "optloop/source.hpp"

#include "helpers.hpp"

using namespace optloop;

TEST_CASE("split_lines handles terminators and empties") {
    CHECK(split_lines("a\nb\n") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("a\nb") == std::vector<std::string>{"a", "b"});
    CHECK(split_lines("").empty());
    CHECK(split_lines("\n") == std::vector<std::string>{""});
    CHECK(split_lines("\n\n") == std::vector<std::string>{"", ""});
    CHECK(split_lines("a\n\nb") == std::vector<std::string>{"a", "", "b"});
}

TEST_CASE("locate_region whole file and lines") {
    Region whole;
    whole.mode = RegionMode::whole_file;
    CHECK(locate_region("a\nb\nc\n", whole) == LineInterval{1, 3});
    CHECK(locate_region("a", whole) == LineInterval{1, 1});

    Region lines;
    lines.mode = RegionMode::lines;
    lines.start_line = 2;
    lines.end_line = 3;
    CHECK(locate_region("a\nb\nc\nd\n", lines) == LineInterval{2, 3});

    // Intervals clamp to the file rather than erroring.
    lines.start_line = 2;
    lines.end_line = 99;
    CHECK(locate_region("a\nb\nc\n", lines) == LineInterval{2, 3});
}

TEST_CASE("locate_region markers") {
    Region region;
    region.mode = RegionMode::markers;
    region.begin_marker = "// OPT-BEGIN";
    region.end_marker = "// OPT-END";

    const std::string text = "header\n// OPT-BEGIN\nbody1\nbody2\n// OPT-END\nfooter\n";
    CHECK(locate_region(text, region) == LineInterval{3, 4});

    CHECK_THROWS_AS(locate_region("no markers here\n", region), MarkerNotFound);
    CHECK_THROWS_AS(locate_region("x\n// OPT-BEGIN\nbody\n", region), MarkerNotFound);
    CHECK_THROWS_AS(locate_region("// OPT-BEGIN\n// OPT-END\n", region), EmptyRegion);
}

TEST_CASE("extract_snippet joins interval lines without a trailing newline") {
    const std::string text = "a\nb\nc\n";
    CHECK(extract_snippet(text, {1, 3}) == "a\nb\nc");
    CHECK(extract_snippet(text, {2, 3}) == "b\nc");
    CHECK(extract_snippet(text, {2, 2}) == "b");
    CHECK(extract_snippet("a\nb", {1, 1}) == "a");
    CHECK(extract_snippet(text, {3, 2}).empty());  // empty interval anchored at 3
    CHECK_THROWS_AS(extract_snippet(text, {2, 5}), IntervalOutOfBounds);
    CHECK_THROWS_AS(extract_snippet("a\nb", {3, 3}), IntervalOutOfBounds);
    CHECK_THROWS_AS(extract_snippet(text, {0, 1}), IntervalOutOfBounds);
}

namespace {

SourceVersion version_at(const std::string& full_text, LineInterval interval) {
    SourceVersion v;
    v.full_text = full_text;
    v.region_lines = interval;
    v.snippet = extract_snippet(full_text, interval);
    return v;
}

}  // namespace

TEST_CASE("splice_snippet replaces the interval and updates the region") {
    SourceVersion prev = version_at("a\nb\nc\n", {2, 2});
    SourceVersion next = splice_snippet(prev, "X\nY");
    CHECK(next.full_text == "a\nX\nY\nc\n");
    CHECK(next.region_lines == LineInterval{2, 3});
    CHECK(next.snippet == "X\nY");
    CHECK(next.iteration_index == prev.iteration_index + 1);

    // Growth shifts the suffix; the surrounding text is untouched.
    SourceVersion ten = version_at("1\n2\n3\n4\n5\n6\n7\n8\n9\n10\n", {4, 6});
    SourceVersion grown = splice_snippet(ten, "a\nb\nc\nd\ne");
    CHECK(split_lines(grown.full_text).size() == 12);
    CHECK(grown.full_text.rfind("7\n8\n9\n10\n") != std::string::npos);
    CHECK(grown.region_lines == LineInterval{4, 8});
}

TEST_CASE("splice_snippet round-trips the extracted snippet") {
    const std::string text = "alpha\nbeta\ngamma\ndelta\n";
    for (int first = 1; first <= 4; ++first) {
        for (int last = first; last <= 4; ++last) {
            SourceVersion prev = version_at(text, {first, last});
            CHECK(splice_snippet(prev, prev.snippet).full_text == text);
        }
    }
}

TEST_CASE("splice_snippet edge shapes") {
    // Empty snippet deletes the region.
    SourceVersion prev = version_at("a\nb\nc\n", {2, 2});
    CHECK(splice_snippet(prev, "").full_text == "a\nc\n");

    // Insertion at an empty interval.
    SourceVersion empty = version_at("a\nb\n", {2, 1});
    SourceVersion inserted = splice_snippet(empty, "Z");
    CHECK(inserted.full_text == "a\nZ\nb\n");
    CHECK(inserted.region_lines == LineInterval{2, 2});

    // A trailing '\n' in the snippet denotes a final empty line.
    SourceVersion tail = splice_snippet(prev, "X\n");
    CHECK(tail.full_text == "a\nX\n\nc\n");
    CHECK(tail.region_lines == LineInterval{2, 3});
    CHECK(extract_snippet(tail.full_text, tail.region_lines) == "X\n");

    // No trailing newline in the file stays that way.
    SourceVersion bare = version_at("a\nb", {2, 2});
    CHECK(splice_snippet(bare, "Q").full_text == "a\nQ");
}

TEST_CASE("make_source_version extracts the located region") {
    Region region;
    region.mode = RegionMode::markers;
    region.begin_marker = "//B";
    region.end_marker = "//E";
    SourceVersion v = make_source_version("x\n//B\nmid\n//E\ny\n", region);
    CHECK(v.iteration_index == 0);
    CHECK(v.region_lines == LineInterval{3, 3});
    CHECK(v.snippet == "mid");
}

TEST_CASE("markers survive arbitrary splices") {
    Region region;
    region.mode = RegionMode::markers;
    region.begin_marker = "// OPT-BEGIN";
    region.end_marker = "// OPT-END";
    SourceVersion v =
        make_source_version("top\n// OPT-BEGIN\nold1\nold2\n// OPT-END\nbottom\n", region);
    const char* replacements[] = {"one", "a\nb\nc\nd", "x\ny"};
    for (const char* repl : replacements) {
        v = splice_snippet(v, repl);
        LineInterval relocated = locate_region(v.full_text, region);
        CHECK(relocated == v.region_lines);
        CHECK(v.full_text.rfind("top\n// OPT-BEGIN\n", 0) == 0);
        CHECK(v.full_text.find("// OPT-END\nbottom\n") != std::string::npos);
    }

    // Deleting the region leaves the markers adjacent, which stops the loop
    // loudly on the next locate rather than rewriting outside the region.
    SourceVersion deleted = splice_snippet(v, "");
    CHECK(deleted.full_text.find("// OPT-BEGIN\n// OPT-END") != std::string::npos);
    CHECK_THROWS_AS(locate_region(deleted.full_text, region), EmptyRegion);
}

TEST_CASE("random extract-splice round trip") {
    std::mt19937 rng(20240817u);
    std::uniform_int_distribution<int> line_count_dist(1, 30);
    std::uniform_int_distribution<int> line_len_dist(0, 18);
    std::uniform_int_distribution<int> char_dist(32, 126);

    for (int trial = 0; trial < 300; ++trial) {
        int count = line_count_dist(rng);
        std::string text;
        for (int i = 0; i < count; ++i) {
            int len = line_len_dist(rng);
            for (int c = 0; c < len; ++c) text += static_cast<char>(char_dist(rng));
            text += '\n';
        }
        if (rng() % 4 == 0 && !text.empty()) text.pop_back();  // sometimes no final newline

        std::uniform_int_distribution<int> first_dist(1, count);
        int first = first_dist(rng);
        std::uniform_int_distribution<int> last_dist(first - 1, count);
        int last = last_dist(rng);

        SourceVersion prev = version_at(text, {first, last});
        SourceVersion next = splice_snippet(prev, prev.snippet);
        // A region of exactly one empty line extracts to "", which splices as
        // a deletion; every other shape restores the file byte for byte.
        if (first == last && prev.snippet.empty()) {
            std::vector<std::string> lines = split_lines(text);
            lines.erase(lines.begin() + (first - 1));
            std::string expect;
            for (const auto& l : lines) expect += l + "\n";
            if (!text.empty() && text.back() != '\n' && !expect.empty()) expect.pop_back();
            CHECK(next.full_text == expect);
        } else {
            CHECK(next.full_text == text);
            CHECK(extract_snippet(next.full_text, next.region_lines) == prev.snippet);
        }
    }
}

TEST_CASE("extract_code_block takes the last complete fenced block") {
    CHECK(!extract_code_block("no code here").has_value());
    CHECK(extract_code_block("text\n```cpp\nint x;\n```\nbye") == "int x;");
    CHECK(extract_code_block("```\nplain\n```") == "plain");
    CHECK(extract_code_block("```cpp\nfirst\n```\nmid\n```cpp\nsecond\n```") == "second");
    CHECK(extract_code_block("```c++\na\nb\n```\n") == "a\nb");

    // Unterminated fences do not count.
    CHECK(!extract_code_block("```cpp\nint x;").has_value());
    CHECK(extract_code_block("```\nok\n```\n```\ndangling") == "ok");

    // An empty block is present but empty; the loop policy handles it.
    auto empty = extract_code_block("```\n```");
    REQUIRE(empty.has_value());
    CHECK(empty->empty());
}

TEST_CASE("extract_code_block never returns fence lines") {
    auto block = extract_code_block("```cpp\nreal();\n```\n\n```\nlast();\n```\n");
    REQUIRE(block.has_value());
    for (const auto& line : split_lines(*block)) {
        CHECK(line.rfind("```", 0) != 0);
    }
}

TEST_CASE("text file io normalizes and restores line endings") {
    testutil::TempDir dir;
    const std::string path = dir.file("crlf.txt").string();

    testutil::write_file(path, "a\r\nb\r\n");
    FileText crlf = read_text_file(path);
    CHECK(crlf.text == "a\nb\n");
    CHECK(crlf.crlf);

    write_text_file(path, crlf.text, crlf.crlf);
    CHECK(testutil::read_file(path) == "a\r\nb\r\n");

    testutil::write_file(path, "a\r\nb\n");  // mixed endings stay plain on write
    FileText mixed = read_text_file(path);
    CHECK(mixed.text == "a\nb\n");
    CHECK(!mixed.crlf);

    CHECK_THROWS(read_text_file(dir.file("absent.txt").string()));
}
