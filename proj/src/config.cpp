#include "optloop/config.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace optloop {
namespace {

const char* const kGoalAndTasks =
    "Your goal is to focus on high-impact optimizations that significantly reduce execution "
    "time. Follow these tasks carefully:\n"
    "Task 1: Report Analysis - Analyze the optimization report and extract a prioritized list "
    "of the top 3 issues that are most likely to have a significant impact on performance. "
    "Focus on issues that are directly related to execution time bottlenecks or critical paths "
    "in the code.\n"
    "Task 2: Code Analysis - Based on the extracted prioritized list, select the single "
    "highest-impact issue. Identify the specific code segments that are directly related to "
    "this issue. Do not suggest changes to unrelated or low-impact parts of the code.\n"
    "Task 3: Code Improvement - Rewrite only the identified code segments from Task 2 to "
    "address the selected issue and enable better compiler optimizations. Ensure the rewritten "
    "code is functionally equivalent to the original code. Return the entire code in a single "
    "code block.";

PromptSet build_default_prompts() {
    PromptSet p;
    p.context.text =
        "You are an expert in C++ compiler optimizations and code performance tuning for "
        "modern Intel x86.";
    p.first.text =
        "You are provided with the following code snippet:\n{code}\n"
        "The execution time for 10 runs of the code is {scoreint} milliseconds. "
        "The compiler, {compilerfamily}, has generated the following optimization report:\n"
        "{report}\n" +
        std::string(kGoalAndTasks);
    p.success.text =
        "The execution time for 10 runs of the latest code is {scoreint} milliseconds. "
        "The compiler, {compilerfamily}, has generated the following optimization report:\n"
        "{report}\n" +
        std::string(kGoalAndTasks);
    p.compile_error.text =
        "This version did not compile. Here are the error messages:\n{report}\nTry again.";
    p.test_failure.text =
        "This version failed the regression tests. Here are the error messages:\n{report}\n"
        "Try again.";
    return p;
}

bool is_placeholder_char(char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'; }

bool is_known_placeholder(const std::string& name) {
    return name == "code" || name == "report" || name == "scoreint" || name == "compilerfamily";
}

std::string join_path(const std::string& base, const std::string& rel) {
    if (rel.empty() || rel.front() == '/') return rel;
    // Work steps run from per-run scratch directories, so a resolved path
    // must not depend on the launch directory.
    fs::path joined = base.empty() ? fs::path(rel) : fs::path(base) / rel;
    return fs::absolute(joined).lexically_normal().string();
}

bool is_readable_file(const std::string& path) {
    std::ifstream in(path);
    return in.good();
}

int line_of_byte(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < text.size() && i < byte; ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

// Collects schema/type problems so every violation is reported at once.
struct Loader {
    std::vector<std::string>& violations;

    void check_keys(const json& obj, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            bool known = false;
            for (const char* k : allowed) {
                if (it.key() == k) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                violations.push_back("unknown key: " + (prefix.empty() ? "" : prefix + ".") +
                                     it.key());
            }
        }
    }

    std::string get_string(const json& obj, const std::string& prefix, const char* key,
                           std::string fallback = {}) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_string()) {
            violations.push_back(prefix + "." + key + ": expected a string");
            return fallback;
        }
        return v.get<std::string>();
    }

    long long get_int(const json& obj, const std::string& prefix, const char* key,
                      long long fallback) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) {
            violations.push_back(prefix + "." + key + ": expected an integer");
            return fallback;
        }
        return v.get<long long>();
    }

    double get_number(const json& obj, const std::string& prefix, const char* key,
                      double fallback) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_number()) {
            violations.push_back(prefix + "." + key + ": expected a number");
            return fallback;
        }
        return v.get<double>();
    }

    std::vector<std::string> get_string_array(const json& obj, const std::string& prefix,
                                              const char* key,
                                              std::vector<std::string> fallback = {}) {
        if (!obj.contains(key)) return fallback;
        const json& v = obj.at(key);
        if (!v.is_array()) {
            violations.push_back(prefix + "." + key + ": expected an array of strings");
            return fallback;
        }
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) {
                violations.push_back(prefix + "." + key + ": expected an array of strings");
                return fallback;
            }
            out.push_back(e.get<std::string>());
        }
        return out;
    }
};

std::vector<std::string> split_whitespace(const std::string& text) {
    std::vector<std::string> parts;
    std::istringstream in(text);
    std::string word;
    while (in >> word) parts.push_back(word);
    return parts;
}

std::string region_mode_name(RegionMode mode) {
    switch (mode) {
        case RegionMode::whole_file: return "whole-file";
        case RegionMode::lines: return "lines";
        case RegionMode::markers: return "markers";
    }
    return "whole-file";
}

std::string policy_name(MissingCodePolicy policy) {
    return policy == MissingCodePolicy::reprompt ? "reprompt" : "fail_iteration";
}

// default report_flags per family; applied when the file omits them.
std::vector<std::string> default_report_flags(CompilerFamily family) {
    switch (family) {
        case CompilerFamily::clang: return {"-Rpass-missed=."};
        case CompilerFamily::gcc: return {"-fopt-info-missed", "-fopt-info-vec-missed"};
        case CompilerFamily::other: return {};
    }
    return {};
}

void validate(const Config& c, std::vector<std::string>& violations) {
    if (c.compiler.command.empty()) violations.push_back("compiler.command is empty");
    if ((c.compiler.family == CompilerFamily::clang || c.compiler.family == CompilerFamily::gcc) &&
        c.compiler.report_flags.empty()) {
        violations.push_back("compiler.report_flags is empty for family " +
                             compiler_family_name(c.compiler.family));
    }
    if (!(c.compiler.timeout_seconds > 0)) {
        violations.push_back("compiler.timeout_seconds must be positive");
    }
    if (c.target.source_path.empty()) {
        violations.push_back("target.source is empty");
    } else if (!is_readable_file(c.target.source_path)) {
        violations.push_back("target.source is not a readable file: " + c.target.source_path);
    }
    if (c.target.region.mode == RegionMode::lines &&
        !(1 <= c.target.region.start_line && c.target.region.start_line <= c.target.region.end_line)) {
        violations.push_back("target.region: 1 ≤ start_line ≤ end_line violated");
    }
    if (c.target.region.mode == RegionMode::markers &&
        (c.target.region.begin_marker.empty() || c.target.region.end_marker.empty() ||
         c.target.region.begin_marker == c.target.region.end_marker)) {
        violations.push_back("target.region: markers must be non-empty and distinct");
    }
    if (c.harness.command.empty()) violations.push_back("harness.command is empty");
    if (!(c.harness.timeout_seconds > 0)) {
        violations.push_back("harness.timeout_seconds must be positive");
    }
    if (c.provider.kind == ProviderKind::replay) {
        if (c.provider.replay_file.empty()) {
            violations.push_back("provider.replay_file is required for the replay provider");
        }
    } else {
        const std::string kind = provider_kind_name(c.provider.kind);
        if (c.provider.endpoint.empty()) {
            violations.push_back("provider.endpoint is required for " + kind);
        }
        if (c.provider.model.empty()) {
            violations.push_back("provider.model is required for " + kind);
        }
        if (c.provider.api_key_env.empty()) {
            violations.push_back("provider.api_key_env is required for " + kind);
        }
    }
    if (!(c.provider.temperature >= 0.0 && c.provider.temperature <= 2.0)) {
        violations.push_back("provider.temperature must lie in [0, 2]");
    }
    if (c.provider.max_tokens < 1) violations.push_back("provider.max_tokens ≥ 1 violated");
    if (c.provider.price_per_million_input < 0 || c.provider.price_per_million_output < 0) {
        violations.push_back("provider prices must be ≥ 0");
    }
    if (c.loop.iterations < 1) {
        violations.push_back("iterations ≥ 1 violated (got " + std::to_string(c.loop.iterations) +
                             ")");
    }
    if (c.loop.runs < 1) {
        violations.push_back("runs ≥ 1 violated (got " + std::to_string(c.loop.runs) + ")");
    }
    if (c.loop.report_char_budget < 256) {
        violations.push_back("report_char_budget ≥ 256 violated (got " +
                             std::to_string(c.loop.report_char_budget) + ")");
    }
    if (c.out_dir.empty()) violations.push_back("out_dir is empty");
    auto has_report = [](const PromptTemplate& t) {
        auto names = scan_placeholders(t.text);
        return std::find(names.begin(), names.end(), "report") != names.end();
    };
    if (!has_report(c.prompts.compile_error)) {
        violations.push_back("prompts.compile_error must contain {report}");
    }
    if (!has_report(c.prompts.test_failure)) {
        violations.push_back("prompts.test_failure must contain {report}");
    }
}

void check_placeholders(const PromptSet& prompts) {
    const std::pair<const char*, const PromptTemplate*> entries[] = {
        {"context", &prompts.context},         {"first", &prompts.first},
        {"success", &prompts.success},         {"compile_error", &prompts.compile_error},
        {"test_failure", &prompts.test_failure}};
    for (const auto& [id, tmpl] : entries) {
        for (const auto& name : scan_placeholders(tmpl->text)) {
            if (!is_known_placeholder(name)) throw UnknownPlaceholder(name, id);
        }
    }
}

// "@path" prompt values load from a file relative to the config directory.
std::string resolve_prompt_text(const std::string& value, const std::string& base_dir) {
    if (value.empty() || value.front() != '@') return value;
    std::string path = join_path(base_dir, value.substr(1));
    if (!is_readable_file(path)) throw FileNotFound(path);
    return read_text_file(path).text;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> v)
    : std::runtime_error([&v] {
          std::string msg = "invalid configuration:";
          for (const auto& s : v) msg += "\n  - " + s;
          return msg;
      }()),
      violations(std::move(v)) {}

const PromptSet& default_prompts() {
    static const PromptSet prompts = build_default_prompts();
    return prompts;
}

const char* const kMissingCodeSentence =
    "Your previous response contained no code block. Return the entire code in a single code "
    "block.";

std::vector<std::string> scan_placeholders(const std::string& text) {
    std::vector<std::string> names;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            i += 2;
            continue;
        }
        if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            i += 2;
            continue;
        }
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < text.size() && is_placeholder_char(text[j])) ++j;
            if (j > i + 1 && j < text.size() && text[j] == '}') {
                names.push_back(text.substr(i + 1, j - i - 1));
                i = j + 1;
                continue;
            }
        }
        ++i;
    }
    return names;
}

std::string render_prompt(const PromptTemplate& tmpl, const PromptContext& ctx) {
    const std::string& text = tmpl.text;
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (c == '{' && i + 1 < text.size() && text[i + 1] == '{') {
            out += '{';
            i += 2;
            continue;
        }
        if (c == '}' && i + 1 < text.size() && text[i + 1] == '}') {
            out += '}';
            i += 2;
            continue;
        }
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < text.size() && is_placeholder_char(text[j])) ++j;
            if (j > i + 1 && j < text.size() && text[j] == '}') {
                std::string name = text.substr(i + 1, j - i - 1);
                if (is_known_placeholder(name)) {
                    if (name == "code") {
                        if (!ctx.code) throw MissingVariable(name);
                        out += *ctx.code;
                    } else if (name == "report") {
                        if (!ctx.report) throw MissingVariable(name);
                        out += *ctx.report;
                    } else if (name == "scoreint") {
                        if (!ctx.scoreint) throw MissingVariable(name);
                        out += std::to_string(*ctx.scoreint);
                    } else {
                        if (!ctx.compilerfamily) throw MissingVariable(name);
                        out += *ctx.compilerfamily;
                    }
                    i = j + 1;
                    continue;
                }
            }
        }
        out += c;
        ++i;
    }
    return out;
}

namespace {

void apply_defaults_and_resolve(Config& config, const std::string& base_dir) {
    if (config.compiler.report_flags.empty()) {
        config.compiler.report_flags = default_report_flags(config.compiler.family);
    }
    if (config.compiler.syntax_check_flags.empty()) {
        config.compiler.syntax_check_flags = {"-fsyntax-only"};
    }
    if (config.prompts.context.text.empty()) config.prompts.context = default_prompts().context;
    if (config.prompts.first.text.empty()) config.prompts.first = default_prompts().first;
    if (config.prompts.success.text.empty()) config.prompts.success = default_prompts().success;
    if (config.prompts.compile_error.text.empty()) {
        config.prompts.compile_error = default_prompts().compile_error;
    }
    if (config.prompts.test_failure.text.empty()) {
        config.prompts.test_failure = default_prompts().test_failure;
    }
    if (config.out_dir.empty()) config.out_dir = "out";

    config.target.source_path = join_path(base_dir, config.target.source_path);
    if (!config.provider.replay_file.empty()) {
        config.provider.replay_file = join_path(base_dir, config.provider.replay_file);
    }
    config.out_dir = join_path(base_dir, config.out_dir);
    // A relative harness path like "./harness.sh" stays usable from any cwd;
    // bare names keep PATH lookup.
    if (!config.harness.command.empty()) {
        std::string& exe = config.harness.command.front();
        if (!exe.empty() && exe.front() != '/' && exe.find('/') != std::string::npos) {
            exe = join_path(base_dir, exe);
        }
    }
}

}  // namespace

void finalize_config(Config& config, const std::string& base_dir) {
    apply_defaults_and_resolve(config, base_dir);
    std::vector<std::string> violations;
    validate(config, violations);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    check_placeholders(config.prompts);
}

Config load_config(const std::string& path) {
    if (!is_readable_file(path)) throw FileNotFound(path);
    FileText raw = read_text_file(path);
    json root;
    try {
        root = json::parse(raw.text);
    } catch (const json::parse_error& e) {
        throw ParseError(line_of_byte(raw.text, e.byte), e.what());
    }
    if (!root.is_object()) throw ParseError(1, "top-level value is not an object");

    std::vector<std::string> violations;
    Loader loader{violations};
    Config config;

    loader.check_keys(root, "",
                      {"compiler", "target", "harness", "provider", "loop", "prompts", "out_dir"});

    if (root.contains("compiler") && root.at("compiler").is_object()) {
        const json& jc = root.at("compiler");
        loader.check_keys(jc, "compiler",
                          {"family", "command", "opt_flags", "report_flags", "syntax_check_flags",
                           "timeout_seconds"});
        std::string family = loader.get_string(jc, "compiler", "family", "clang");
        if (family == "clang") {
            config.compiler.family = CompilerFamily::clang;
        } else if (family == "gcc") {
            config.compiler.family = CompilerFamily::gcc;
        } else if (family == "other") {
            config.compiler.family = CompilerFamily::other;
        } else {
            violations.push_back("compiler.family: expected clang, gcc, or other");
        }
        config.compiler.command = loader.get_string(jc, "compiler", "command");
        config.compiler.opt_flags = loader.get_string_array(jc, "compiler", "opt_flags");
        config.compiler.report_flags = loader.get_string_array(jc, "compiler", "report_flags");
        config.compiler.syntax_check_flags =
            loader.get_string_array(jc, "compiler", "syntax_check_flags");
        config.compiler.timeout_seconds =
            loader.get_number(jc, "compiler", "timeout_seconds", 300.0);
    } else {
        violations.push_back("compiler section is required");
    }

    if (root.contains("target") && root.at("target").is_object()) {
        const json& jt = root.at("target");
        loader.check_keys(jt, "target", {"source", "region"});
        config.target.source_path = loader.get_string(jt, "target", "source");
        if (jt.contains("region") && jt.at("region").is_object()) {
            const json& jr = jt.at("region");
            loader.check_keys(jr, "target.region",
                              {"mode", "start_line", "end_line", "begin_marker", "end_marker"});
            std::string mode = loader.get_string(jr, "target.region", "mode", "whole-file");
            if (mode == "whole-file") {
                config.target.region.mode = RegionMode::whole_file;
            } else if (mode == "lines") {
                config.target.region.mode = RegionMode::lines;
            } else if (mode == "markers") {
                config.target.region.mode = RegionMode::markers;
            } else {
                violations.push_back(
                    "target.region.mode: expected whole-file, lines, or markers");
            }
            config.target.region.start_line =
                static_cast<int>(loader.get_int(jr, "target.region", "start_line", 0));
            config.target.region.end_line =
                static_cast<int>(loader.get_int(jr, "target.region", "end_line", 0));
            config.target.region.begin_marker =
                loader.get_string(jr, "target.region", "begin_marker");
            config.target.region.end_marker = loader.get_string(jr, "target.region", "end_marker");
        }
    } else {
        violations.push_back("target section is required");
    }

    if (root.contains("harness") && root.at("harness").is_object()) {
        const json& jh = root.at("harness");
        loader.check_keys(jh, "harness", {"command", "timeout_seconds"});
        if (jh.contains("command")) {
            const json& jcmd = jh.at("command");
            if (jcmd.is_string()) {
                config.harness.command = split_whitespace(jcmd.get<std::string>());
            } else if (jcmd.is_array()) {
                config.harness.command = loader.get_string_array(jh, "harness", "command");
            } else {
                violations.push_back("harness.command: expected a string or array of strings");
            }
        }
        config.harness.timeout_seconds = loader.get_number(jh, "harness", "timeout_seconds", 600.0);
    } else {
        violations.push_back("harness section is required");
    }

    if (root.contains("provider") && root.at("provider").is_object()) {
        const json& jp = root.at("provider");
        loader.check_keys(jp, "provider",
                          {"kind", "endpoint", "model", "api_key_env", "temperature", "max_tokens",
                           "replay_file", "price_per_million_input", "price_per_million_output"});
        std::string kind = loader.get_string(jp, "provider", "kind", "replay");
        if (auto parsed = provider_kind_from(kind)) {
            config.provider.kind = *parsed;
        } else {
            violations.push_back(
                "provider.kind: expected openai_compatible, anthropic_compatible, or replay");
        }
        config.provider.endpoint = loader.get_string(jp, "provider", "endpoint");
        config.provider.model = loader.get_string(jp, "provider", "model");
        config.provider.api_key_env = loader.get_string(jp, "provider", "api_key_env");
        config.provider.replay_file = loader.get_string(jp, "provider", "replay_file");
        config.provider.temperature = loader.get_number(jp, "provider", "temperature", 0.2);
        config.provider.max_tokens =
            static_cast<int>(loader.get_int(jp, "provider", "max_tokens", 4096));
        config.provider.price_per_million_input =
            loader.get_number(jp, "provider", "price_per_million_input", 0.0);
        config.provider.price_per_million_output =
            loader.get_number(jp, "provider", "price_per_million_output", 0.0);
    } else {
        violations.push_back("provider section is required");
    }

    if (root.contains("loop")) {
        if (root.at("loop").is_object()) {
            const json& jl = root.at("loop");
            loader.check_keys(jl, "loop",
                              {"iterations", "runs", "report_char_budget", "on_missing_code_block"});
            config.loop.iterations = static_cast<int>(loader.get_int(jl, "loop", "iterations", 6));
            config.loop.runs = static_cast<int>(loader.get_int(jl, "loop", "runs", 5));
            config.loop.report_char_budget =
                static_cast<int>(loader.get_int(jl, "loop", "report_char_budget", 8000));
            std::string policy =
                loader.get_string(jl, "loop", "on_missing_code_block", "fail_iteration");
            if (policy == "fail_iteration") {
                config.loop.on_missing_code_block = MissingCodePolicy::fail_iteration;
            } else if (policy == "reprompt") {
                config.loop.on_missing_code_block = MissingCodePolicy::reprompt;
            } else {
                violations.push_back(
                    "loop.on_missing_code_block: expected fail_iteration or reprompt");
            }
        } else {
            violations.push_back("loop: expected an object");
        }
    }

    std::string base_dir = fs::path(path).parent_path().string();

    if (root.contains("prompts")) {
        if (root.at("prompts").is_object()) {
            const json& jp = root.at("prompts");
            loader.check_keys(jp, "prompts",
                              {"context", "first", "success", "compile_error", "test_failure"});
            config.prompts.context.text =
                resolve_prompt_text(loader.get_string(jp, "prompts", "context"), base_dir);
            config.prompts.first.text =
                resolve_prompt_text(loader.get_string(jp, "prompts", "first"), base_dir);
            config.prompts.success.text =
                resolve_prompt_text(loader.get_string(jp, "prompts", "success"), base_dir);
            config.prompts.compile_error.text =
                resolve_prompt_text(loader.get_string(jp, "prompts", "compile_error"), base_dir);
            config.prompts.test_failure.text =
                resolve_prompt_text(loader.get_string(jp, "prompts", "test_failure"), base_dir);
        } else {
            violations.push_back("prompts: expected an object");
        }
    }

    config.out_dir = loader.get_string(root, "", "out_dir", "out");

    apply_defaults_and_resolve(config, base_dir);
    validate(config, violations);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    check_placeholders(config.prompts);
    return config;
}

std::string write_config(const Config& c) {
    json root;
    root["compiler"] = {{"family", compiler_family_name(c.compiler.family)},
                        {"command", c.compiler.command},
                        {"opt_flags", c.compiler.opt_flags},
                        {"report_flags", c.compiler.report_flags},
                        {"syntax_check_flags", c.compiler.syntax_check_flags},
                        {"timeout_seconds", c.compiler.timeout_seconds}};
    root["target"] = {{"source", c.target.source_path},
                      {"region",
                       {{"mode", region_mode_name(c.target.region.mode)},
                        {"start_line", c.target.region.start_line},
                        {"end_line", c.target.region.end_line},
                        {"begin_marker", c.target.region.begin_marker},
                        {"end_marker", c.target.region.end_marker}}}};
    root["harness"] = {{"command", c.harness.command},
                       {"timeout_seconds", c.harness.timeout_seconds}};
    root["provider"] = {{"kind", provider_kind_name(c.provider.kind)},
                        {"endpoint", c.provider.endpoint},
                        {"model", c.provider.model},
                        {"api_key_env", c.provider.api_key_env},
                        {"replay_file", c.provider.replay_file},
                        {"temperature", c.provider.temperature},
                        {"max_tokens", c.provider.max_tokens},
                        {"price_per_million_input", c.provider.price_per_million_input},
                        {"price_per_million_output", c.provider.price_per_million_output}};
    root["loop"] = {{"iterations", c.loop.iterations},
                    {"runs", c.loop.runs},
                    {"report_char_budget", c.loop.report_char_budget},
                    {"on_missing_code_block", policy_name(c.loop.on_missing_code_block)}};
    root["prompts"] = {{"context", c.prompts.context.text},
                       {"first", c.prompts.first.text},
                       {"success", c.prompts.success.text},
                       {"compile_error", c.prompts.compile_error.text},
                       {"test_failure", c.prompts.test_failure.text}};
    root["out_dir"] = c.out_dir;
    return root.dump(2) + "\n";
}

void write_config_file(const Config& config, const std::string& path) {
    write_text_file(path, write_config(config));
}

}  // namespace optloop
