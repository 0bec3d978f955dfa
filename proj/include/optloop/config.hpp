#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "optloop/evaluator.hpp"
#include "optloop/llm.hpp"
#include "optloop/optreport.hpp"
#include "optloop/source.hpp"

namespace optloop {

struct TargetSpec {
    std::string source_path;
    Region region;

    bool operator==(const TargetSpec&) const = default;
};

enum class MissingCodePolicy { fail_iteration, reprompt };

struct LoopSpec {
    int iterations = 6;
    int runs = 5;
    int report_char_budget = 8000;
    MissingCodePolicy on_missing_code_block = MissingCodePolicy::fail_iteration;

    bool operator==(const LoopSpec&) const = default;
};

// Placeholder vocabulary is closed: {code}, {report}, {scoreint},
// {compilerfamily}. Doubled braces escape literals.
struct PromptTemplate {
    std::string text;

    bool operator==(const PromptTemplate&) const = default;
};

struct PromptSet {
    PromptTemplate context;
    PromptTemplate first;
    PromptTemplate success;
    PromptTemplate compile_error;
    PromptTemplate test_failure;

    bool operator==(const PromptSet&) const = default;
};

// Values available to render one prompt; a template may use any subset.
struct PromptContext {
    std::optional<std::string> code;
    std::optional<std::string> report;
    std::optional<long long> scoreint;
    std::optional<std::string> compilerfamily;
};

struct Config {
    CompilerSpec compiler;
    TargetSpec target;
    HarnessSpec harness;
    ProviderSpec provider;
    LoopSpec loop;
    PromptSet prompts;
    std::string out_dir = "out";

    bool operator==(const Config&) const = default;
};

struct FileNotFound : std::runtime_error {
    explicit FileNotFound(const std::string& path)
        : std::runtime_error("file not found: " + path), path(path) {}
    std::string path;
};

struct ParseError : std::runtime_error {
    ParseError(int line, const std::string& reason)
        : std::runtime_error("parse error at line " + std::to_string(line) + ": " + reason),
          line(line),
          reason(reason) {}
    int line;
    std::string reason;
};

// Carries every violated invariant, not just the first.
struct ValidationError : std::runtime_error {
    explicit ValidationError(std::vector<std::string> violations);
    std::vector<std::string> violations;
};

struct UnknownPlaceholder : std::runtime_error {
    UnknownPlaceholder(const std::string& name, const std::string& template_id)
        : std::runtime_error("unknown placeholder {" + name + "} in template \"" + template_id +
                             "\""),
          name(name),
          template_id(template_id) {}
    std::string name;
    std::string template_id;
};

struct MissingVariable : std::runtime_error {
    explicit MissingVariable(const std::string& name)
        : std::runtime_error("placeholder {" + name + "} has no value"), name(name) {}
    std::string name;
};

// The shipped templates, used wherever the file omits one.
const PromptSet& default_prompts();

// Sent when a response held no code block and the policy spends an iteration
// asking again.
extern const char* const kMissingCodeSentence;

// Relative paths in the file resolve against the file's own directory.
Config load_config(const std::string& path);

// Applies defaults and validates an in-memory Config (same checks as
// load_config, minus file parsing).
void finalize_config(Config& config, const std::string& base_dir);

std::string write_config(const Config& config);
void write_config_file(const Config& config, const std::string& path);

// Placeholder names appearing in the template, in order, duplicates kept.
std::vector<std::string> scan_placeholders(const std::string& text);

// Single-pass literal substitution; {{ and }} escape braces; values are never
// re-scanned.
std::string render_prompt(const PromptTemplate& tmpl, const PromptContext& ctx);

}  // namespace optloop
