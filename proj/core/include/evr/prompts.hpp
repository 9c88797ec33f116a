#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace evr {

// A text asset with named {{placeholder}} slots. The content hash is part
// of every cache key, so editing a template invalidates cached outputs.
struct PromptTemplate {
    std::string name;
    std::string text;
    std::string sha;  // sha256 hex of text
};

class PromptLibrary {
  public:
    // Loads every required template from `dir` (one .txt file each).
    static PromptLibrary load_dir(const std::filesystem::path& dir);

    const PromptTemplate& get(std::string_view name) const;

    static const std::vector<std::string>& required_names();

  private:
    std::map<std::string, PromptTemplate, std::less<>> templates_;
};

// Substitutes {{name}} slots from vars. Throws ParseError if a slot has
// no binding; absent optional inputs are passed as empty strings by the
// callers that allow them.
std::string render_template(const PromptTemplate& tpl,
                            const std::map<std::string, std::string>& vars);

// Model responses structured as "HEADER: body" sections. A recognized
// header may appear at most once; text before the first header is
// ignored.
struct SectionedResponse {
    std::map<std::string, std::string> sections;

    static SectionedResponse parse(std::string_view text,
                                   std::span<const std::string> known_headers);

    const std::string* find(std::string_view header) const;
};

// Parses "1. item" / "1) item" / "- item" lines; model drift away from
// strict numbering is expected. Blank lines are skipped, items trimmed.
std::vector<std::string> parse_numbered_list(std::string_view body);

std::string trim(std::string_view s);

// True when a response body is the literal not-available marker
// (case-insensitive, surrounding whitespace ignored).
bool is_not_available(std::string_view body);

}  // namespace evr
