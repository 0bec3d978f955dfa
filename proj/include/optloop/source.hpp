#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optloop {

enum class RegionMode { whole_file, lines, markers };

// The user-declared portion of the target file that the model may rewrite.
struct Region {
    RegionMode mode = RegionMode::whole_file;
    int start_line = 0;  // lines mode, 1-based inclusive
    int end_line = 0;
    std::string begin_marker;  // markers mode
    std::string end_marker;

    bool operator==(const Region&) const = default;
};

// Inclusive 1-based line interval. first > last denotes an empty interval
// anchored just before line `first`.
struct LineInterval {
    int first = 1;
    int last = 0;

    bool empty() const { return last < first; }
    int line_count() const { return empty() ? 0 : last - first + 1; }
    bool contains(int line) const { return line >= first && line <= last; }
    bool operator==(const LineInterval&) const = default;
};

// One state of the target file: the full text together with the snippet the
// region currently maps to.
struct SourceVersion {
    int iteration_index = 0;  // 0 = original
    std::string full_text;
    std::string snippet;
    LineInterval region_lines;
};

struct MarkerNotFound : std::runtime_error {
    enum class Which { begin, end };
    MarkerNotFound(Which w, const std::string& marker)
        : std::runtime_error(std::string("marker not found: ") +
                             (w == Which::begin ? "begin" : "end") + " (\"" + marker + "\")"),
          which(w) {}
    Which which;
};

struct EmptyRegion : std::runtime_error {
    EmptyRegion() : std::runtime_error("region between markers is empty") {}
};

struct IntervalOutOfBounds : std::runtime_error {
    IntervalOutOfBounds(LineInterval interval, int line_count)
        : std::runtime_error("line interval [" + std::to_string(interval.first) + "," +
                             std::to_string(interval.last) + "] exceeds file of " +
                             std::to_string(line_count) + " lines") {}
};

// Splits text into lines on '\n'. A trailing newline does not produce a final
// empty element.
std::vector<std::string> split_lines(std::string_view text);

LineInterval locate_region(const std::string& full_text, const Region& region);

std::string extract_snippet(const std::string& full_text, LineInterval interval);

SourceVersion splice_snippet(const SourceVersion& prev, const std::string& new_snippet);

// Builds the iteration-0 version: locates the region and extracts its snippet.
SourceVersion make_source_version(std::string full_text, const Region& region);

// Contents of the last complete ```-fenced block, language tag stripped.
// Absent when no complete block exists.
std::optional<std::string> extract_code_block(const std::string& response);

// Verbatim file text with line endings normalized to '\n'. crlf records
// whether the input used \r\n uniformly so writes can restore it.
struct FileText {
    std::string text;
    bool crlf = false;
};

FileText read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text, bool crlf = false);

}  // namespace optloop
