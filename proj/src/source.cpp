#include "optloop/source.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace optloop {
namespace {

std::string join_lines(const std::vector<std::string>& lines, size_t begin, size_t end) {
    std::string out;
    for (size_t i = begin; i < end; ++i) {
        if (i > begin) out += '\n';
        out += lines[i];
    }
    return out;
}

bool is_fence_line(const std::string& line) { return line.rfind("```", 0) == 0; }

}  // namespace

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < text.size()) {
        size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return lines;
}

LineInterval locate_region(const std::string& full_text, const Region& region) {
    const auto lines = split_lines(full_text);
    const int count = static_cast<int>(lines.size());

    switch (region.mode) {
        case RegionMode::whole_file:
            return {1, count};
        case RegionMode::lines: {
            int first = std::max(1, region.start_line);
            int last = std::min(count, region.end_line);
            return {first, last};
        }
        case RegionMode::markers: {
            int begin_line = 0;
            for (int i = 0; i < count; ++i) {
                if (lines[static_cast<size_t>(i)].find(region.begin_marker) != std::string::npos) {
                    begin_line = i + 1;
                    break;
                }
            }
            if (begin_line == 0)
                throw MarkerNotFound(MarkerNotFound::Which::begin, region.begin_marker);
            int end_line = 0;
            for (int i = begin_line; i < count; ++i) {
                if (lines[static_cast<size_t>(i)].find(region.end_marker) != std::string::npos) {
                    end_line = i + 1;
                    break;
                }
            }
            if (end_line == 0)
                throw MarkerNotFound(MarkerNotFound::Which::end, region.end_marker);
            if (end_line == begin_line + 1) throw EmptyRegion();
            return {begin_line + 1, end_line - 1};
        }
    }
    throw std::logic_error("unreachable region mode");
}

std::string extract_snippet(const std::string& full_text, LineInterval interval) {
    const auto lines = split_lines(full_text);
    const int count = static_cast<int>(lines.size());
    if (interval.first < 1 || interval.last > count || interval.first > interval.last + 1)
        throw IntervalOutOfBounds(interval, count);
    if (interval.empty()) return {};
    return join_lines(lines, static_cast<size_t>(interval.first - 1),
                      static_cast<size_t>(interval.last));
}

SourceVersion splice_snippet(const SourceVersion& prev, const std::string& new_snippet) {
    const auto lines = split_lines(prev.full_text);
    const int count = static_cast<int>(lines.size());
    const LineInterval at = prev.region_lines;
    if (at.first < 1 || at.last > count || at.first > at.last + 1)
        throw IntervalOutOfBounds(at, count);

    // '\n' inside a snippet is a separator, so a trailing '\n' denotes a
    // final empty line. The empty snippet deletes the region outright; both
    // conventions keep extract-then-splice an exact inverse.
    std::vector<std::string> new_lines = split_lines(new_snippet);
    if (!new_snippet.empty() && new_snippet.back() == '\n') new_lines.emplace_back();

    std::vector<std::string> merged;
    merged.reserve(lines.size() + new_lines.size());
    merged.insert(merged.end(), lines.begin(), lines.begin() + (at.first - 1));
    merged.insert(merged.end(), new_lines.begin(), new_lines.end());
    if (!at.empty())
        merged.insert(merged.end(), lines.begin() + at.last, lines.end());
    else
        merged.insert(merged.end(), lines.begin() + (at.first - 1), lines.end());

    // The final '\n' restores the original style, but a last line that is
    // empty exists only if terminated; without it, join would collapse the
    // line away and the region arithmetic below would go stale.
    const bool had_trailing_newline = !prev.full_text.empty() && prev.full_text.back() == '\n';
    std::string full = join_lines(merged, 0, merged.size());
    if (!merged.empty() && (had_trailing_newline || merged.back().empty())) full += '\n';

    SourceVersion next;
    next.iteration_index = prev.iteration_index + 1;
    next.full_text = std::move(full);
    next.region_lines = {at.first, at.first + static_cast<int>(new_lines.size()) - 1};
    next.snippet = join_lines(new_lines, 0, new_lines.size());
    return next;
}

SourceVersion make_source_version(std::string full_text, const Region& region) {
    SourceVersion v;
    v.iteration_index = 0;
    v.region_lines = locate_region(full_text, region);
    v.snippet = extract_snippet(full_text, v.region_lines);
    v.full_text = std::move(full_text);
    return v;
}

std::optional<std::string> extract_code_block(const std::string& response) {
    const auto lines = split_lines(response);

    std::optional<std::pair<size_t, size_t>> last_block;  // [content begin, content end)
    std::optional<size_t> open;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (!is_fence_line(lines[i])) continue;
        if (!open) {
            open = i;
        } else {
            last_block = {*open + 1, i};
            open.reset();
        }
    }
    if (!last_block) return std::nullopt;  // an unterminated fence does not count
    return join_lines(lines, last_block->first, last_block->second);
}

FileText read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string raw = buf.str();

    size_t lf = 0, crlf = 0;
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '\n') continue;
        if (i > 0 && raw[i - 1] == '\r')
            ++crlf;
        else
            ++lf;
    }

    FileText result;
    result.crlf = crlf > 0 && lf == 0;
    result.text.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r' && i + 1 < raw.size() && raw[i + 1] == '\n') continue;
        result.text += raw[i];
    }
    return result;
}

void write_text_file(const std::string& path, const std::string& text, bool crlf) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    if (!crlf) {
        out << text;
    } else {
        for (char c : text) {
            if (c == '\n') out << '\r';
            out << c;
        }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace optloop
