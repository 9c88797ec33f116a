#include "evr/prompts.hpp"

#include <algorithm>
#include <cctype>

#include "evr/corpus_io.hpp"
#include "evr/errors.hpp"
#include "evr/sha256.hpp"

namespace evr {

const std::vector<std::string>& PromptLibrary::required_names() {
    static const std::vector<std::string> names = {
        "decompose_prequel", "decompose_current",   "decompose_sequel",
        "extract_primary_event", "extract_location", "extract_temporal",
        "refine_query",      "frame_caption",       "frame_caption_asr",
        "video_summary",     "video_summary_asr",   "transcript_refine",
    };
    return names;
}

PromptLibrary PromptLibrary::load_dir(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (const auto& name : required_names()) {
        const auto path = dir / (name + ".txt");
        if (!std::filesystem::exists(path)) {
            throw IoError("missing prompt template: " + path.string());
        }
        PromptTemplate tpl;
        tpl.name = name;
        tpl.text = read_text_file(path);
        tpl.sha = sha256_hex(tpl.text);
        lib.templates_.emplace(name, std::move(tpl));
    }
    return lib;
}

const PromptTemplate& PromptLibrary::get(std::string_view name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) {
        throw InvalidInputError("unknown prompt template: " + std::string(name));
    }
    return it->second;
}

std::string render_template(const PromptTemplate& tpl,
                            const std::map<std::string, std::string>& vars) {
    std::string out = tpl.text;
    for (const auto& [key, value] : vars) {
        const std::string slot = "{{" + key + "}}";
        std::size_t pos = 0;
        while ((pos = out.find(slot, pos)) != std::string::npos) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    }
    if (auto pos = out.find("{{"); pos != std::string::npos) {
        auto end = out.find("}}", pos);
        const std::string slot = end == std::string::npos
                                     ? out.substr(pos, 24)
                                     : out.substr(pos, end - pos + 2);
        throw ParseError("template " + tpl.name + " has unbound slot " + slot);
    }
    return out;
}

std::string trim(std::string_view s) {
    std::size_t begin = 0, end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

bool is_not_available(std::string_view body) {
    std::string t = trim(body);
    std::transform(t.begin(), t.end(), t.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return t == "not available";
}

SectionedResponse SectionedResponse::parse(std::string_view text,
                                           std::span<const std::string> known_headers) {
    // Headers may appear at line starts or mid-line ("EXPLANATION: ...
    // EVENTS: 1. a"), so scan for every occurrence of each token.
    struct Mark {
        std::size_t pos;
        std::size_t body_start;
        std::string header;
    };
    std::vector<Mark> marks;
    for (const auto& header : known_headers) {
        const std::string token = header + ":";
        std::size_t pos = 0;
        bool seen = false;
        while ((pos = text.find(token, pos)) != std::string_view::npos) {
            const bool boundary =
                pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
            if (boundary) {
                if (seen) throw ParseError("duplicate section header: " + header);
                seen = true;
                marks.push_back({pos, pos + token.size(), header});
            }
            pos += token.size();
        }
    }
    std::sort(marks.begin(), marks.end(),
              [](const Mark& a, const Mark& b) { return a.pos < b.pos; });

    SectionedResponse out;
    for (std::size_t i = 0; i < marks.size(); ++i) {
        const std::size_t end = i + 1 < marks.size() ? marks[i + 1].pos : text.size();
        out.sections[marks[i].header] =
            trim(text.substr(marks[i].body_start, end - marks[i].body_start));
    }
    return out;
}

const std::string* SectionedResponse::find(std::string_view header) const {
    auto it = sections.find(std::string(header));
    return it == sections.end() ? nullptr : &it->second;
}

std::vector<std::string> parse_numbered_list(std::string_view body) {
    std::vector<std::string> items;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        std::string_view raw = eol == std::string_view::npos
                                   ? body.substr(pos)
                                   : body.substr(pos, eol - pos);
        std::string line = trim(raw);
        if (!line.empty()) {
            std::string item;
            if (line[0] == '-') {
                item = trim(line.substr(1));
            } else if (std::isdigit(static_cast<unsigned char>(line[0]))) {
                std::size_t i = 0;
                while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
                if (i < line.size() && (line[i] == '.' || line[i] == ')')) {
                    item = trim(line.substr(i + 1));
                }
            }
            if (!item.empty()) items.push_back(std::move(item));
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return items;
}

}  // namespace evr
