#include "optloop/optreport.hpp"

#include <charconv>
#include <cstddef>

#include "optloop/subprocess.hpp"

namespace optloop {
namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

struct Anchor {
    std::size_t file_end;   // index of the ':' after the file path
    int line;
    int column;
    std::size_t rest;       // index just past "FILE:L:C: "
};

bool parse_int_field(std::string_view s, int& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

// Leftmost ":<digits>:<digits>: " with a non-empty prefix before it.
std::optional<Anchor> find_anchor(std::string_view line) {
    for (std::size_t i = 1; i < line.size(); ++i) {
        if (line[i] != ':') continue;
        std::size_t j = i + 1;
        std::size_t line_begin = j;
        while (j < line.size() && is_digit(line[j])) ++j;
        if (j == line_begin || j >= line.size() || line[j] != ':') continue;
        std::size_t col_begin = j + 1;
        std::size_t k = col_begin;
        while (k < line.size() && is_digit(line[k])) ++k;
        if (k == col_begin || k >= line.size() || line[k] != ':') continue;
        if (k + 1 >= line.size() || line[k + 1] != ' ') continue;
        Anchor a;
        a.file_end = i;
        if (!parse_int_field(line.substr(line_begin, j - line_begin), a.line)) continue;
        if (!parse_int_field(line.substr(col_begin, k - col_begin), a.column)) continue;
        a.rest = k + 2;
        return a;
    }
    return std::nullopt;
}

std::optional<Severity> take_severity(std::string_view& rest, ReportDialect dialect) {
    struct Entry {
        std::string_view keyword;
        Severity severity;
    };
    static constexpr Entry kClang[] = {{"remark", Severity::remark},
                                       {"note", Severity::note},
                                       {"warning", Severity::warning},
                                       {"error", Severity::error}};
    static constexpr Entry kGcc[] = {{"missed", Severity::missed}, {"note", Severity::note}};
    const Entry* table = dialect == ReportDialect::clang_rpass ? kClang : kGcc;
    std::size_t count = dialect == ReportDialect::clang_rpass ? 4 : 2;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& e = table[i];
        if (rest.size() < e.keyword.size() + 1) continue;
        if (rest.substr(0, e.keyword.size()) != e.keyword) continue;
        if (rest[e.keyword.size()] != ':') continue;
        rest.remove_prefix(e.keyword.size() + 1);
        if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        return e.severity;
    }
    return std::nullopt;
}

// "MSG [-Rchannel=pass]" -> strips the tag, reports channel and pass.
bool take_remark_tag(std::string& message, std::string& channel, std::string& pass) {
    if (message.empty() || message.back() != ']') return false;
    std::size_t open = message.rfind(" [-R");
    if (open == std::string::npos) return false;
    std::string_view tag(message.data() + open + 1, message.size() - open - 1);
    // tag is "[-Rchannel=pass]"
    std::size_t eq = tag.find('=');
    if (eq == std::string_view::npos) return false;
    channel.assign(tag.substr(3, eq - 3));
    pass.assign(tag.substr(eq + 1, tag.size() - eq - 2));
    if (channel.empty() || pass.empty()) return false;
    message.erase(open);
    return true;
}

bool is_numbered_echo(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t digits_begin = i;
    while (i < line.size() && is_digit(line[i])) ++i;
    if (i == digits_begin) return false;
    while (i < line.size() && line[i] == ' ') ++i;
    return i < line.size() && line[i] == '|';
}

bool is_pipe_line(std::string_view line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    return i < line.size() && line[i] == '|';
}

// Caret line without the leading pipe, e.g. "        ^~~~".
bool is_bare_caret(std::string_view line) {
    bool marked = false;
    for (char c : line) {
        if (c == '^' || c == '~') {
            marked = true;
        } else if (c != ' ' && c != '\t') {
            return false;
        }
    }
    return marked;
}

bool is_context_line(std::string_view line) {
    return is_numbered_echo(line) || is_pipe_line(line) || is_bare_caret(line);
}

std::vector<std::string_view> split_path(std::string_view path) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= path.size(); ++i) {
        if (i == path.size() || path[i] == '/') {
            if (i > start) parts.push_back(path.substr(start, i - start));
            start = i + 1;
        }
    }
    return parts;
}

std::string source_stem(const std::string& path) {
    std::size_t slash = path.rfind('/');
    std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    std::size_t dot = base.rfind('.');
    if (dot != std::string::npos && dot > 0) base.erase(dot);
    return base;
}

}  // namespace

std::string compiler_family_name(CompilerFamily family) {
    switch (family) {
        case CompilerFamily::clang: return "clang";
        case CompilerFamily::gcc: return "gcc";
        case CompilerFamily::other: return "other";
    }
    return "other";
}

std::string severity_name(Severity s) {
    switch (s) {
        case Severity::remark: return "remark";
        case Severity::missed: return "missed";
        case Severity::note: return "note";
        case Severity::warning: return "warning";
        case Severity::error: return "error";
    }
    return "remark";
}

ReportDialect dialect_for(CompilerFamily family) {
    return family == CompilerFamily::gcc ? ReportDialect::gcc_optinfo : ReportDialect::clang_rpass;
}

ParsedReport parse_report(std::string_view text, ReportDialect dialect) {
    ParsedReport report;
    for (std::string_view line : split_lines(text)) {
        auto anchor = find_anchor(line);
        if (anchor) {
            std::string_view rest = line.substr(anchor->rest);
            auto severity = take_severity(rest, dialect);
            if (severity) {
                Diagnostic d;
                d.file = std::string(line.substr(0, anchor->file_end));
                d.line = anchor->line;
                d.column = anchor->column;
                d.severity = *severity;
                d.message = std::string(rest);
                if (dialect == ReportDialect::clang_rpass) {
                    std::string channel, pass;
                    if (take_remark_tag(d.message, channel, pass)) {
                        d.pass_name = pass;
                        if (channel == "pass-missed") d.severity = Severity::missed;
                    }
                }
                report.diagnostics.push_back(std::move(d));
                continue;
            }
        }
        if (!report.diagnostics.empty() && is_context_line(line)) {
            report.diagnostics.back().context_lines.emplace_back(line);
            continue;
        }
        ++report.discarded_lines;
    }
    return report;
}

std::vector<Diagnostic> filter_by_region(const std::vector<Diagnostic>& diags,
                                         LineInterval region_lines,
                                         const std::string& target_file) {
    auto target_parts = split_path(target_file);
    std::vector<Diagnostic> kept;
    for (const auto& d : diags) {
        if (!region_lines.contains(d.line)) continue;
        auto parts = split_path(d.file);
        std::size_t n = std::min(parts.size(), target_parts.size());
        if (n == 0) continue;
        bool match = true;
        for (std::size_t i = 1; i <= n; ++i) {
            if (parts[parts.size() - i] != target_parts[target_parts.size() - i]) {
                match = false;
                break;
            }
        }
        if (match) kept.push_back(d);
    }
    return kept;
}

std::string render_diagnostic(const Diagnostic& diag) {
    std::string out = diag.file + ':' + std::to_string(diag.line) + ':' +
                      std::to_string(diag.column) + ": " + severity_name(diag.severity) + ": " +
                      diag.message;
    if (diag.pass_name) out += " [" + *diag.pass_name + ']';
    return out;
}

std::string pack_report(const std::vector<Diagnostic>& diags, int budget_chars) {
    std::string out;
    std::size_t budget = budget_chars > 0 ? static_cast<std::size_t>(budget_chars) : 0;
    std::size_t packed = 0;
    for (const auto& d : diags) {
        std::string line = render_diagnostic(d);
        if (out.size() + line.size() + 1 > budget) break;
        out += line;
        out += '\n';
        ++packed;
    }
    if (packed < diags.size()) {
        out += "... (" + std::to_string(diags.size() - packed) + " more diagnostics omitted)\n";
    }
    return out;
}

CompilerRun run_compiler(const CompilerSpec& spec, const std::string& source, CompileMode mode,
                         const std::string& workdir) {
    std::vector<std::string> argv;
    argv.push_back(spec.command);
    if (mode == CompileMode::report) {
        argv.insert(argv.end(), spec.opt_flags.begin(), spec.opt_flags.end());
        argv.insert(argv.end(), spec.report_flags.begin(), spec.report_flags.end());
        argv.push_back("-c");
        argv.push_back(source);
        argv.push_back("-o");
        argv.push_back(source_stem(source) + ".o");
    } else {
        argv.insert(argv.end(), spec.syntax_check_flags.begin(), spec.syntax_check_flags.end());
        argv.push_back(source);
    }
    ProcessResult result = run_process(argv, workdir, spec.timeout_seconds);
    if (result.timed_out) throw Timeout(spec.timeout_seconds);
    return CompilerRun{result.exit_status, std::move(result.out), std::move(result.err),
                       std::move(argv)};
}

}  // namespace optloop
