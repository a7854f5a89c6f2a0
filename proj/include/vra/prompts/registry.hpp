#pragma once

#include "vra/core/errors.hpp"
#include "vra/core/types.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vra::prompts {

enum class TemplateId {
    captioner_user,
    drafter_system,
    drafter_user,
    inquirer_user,
    vision_user,
    revisor_system,
    revisor_user,
    spokesman_system,
    spokesman_user,
    judge_user,
};

inline constexpr std::array all_template_ids{
    TemplateId::captioner_user,  TemplateId::drafter_system, TemplateId::drafter_user,
    TemplateId::inquirer_user,   TemplateId::vision_user,    TemplateId::revisor_system,
    TemplateId::revisor_user,    TemplateId::spokesman_system, TemplateId::spokesman_user,
    TemplateId::judge_user,
};

std::string_view to_string(TemplateId id);
std::optional<TemplateId> template_id_from_string(std::string_view name);

// Placeholder names a template may use. "image" stands for the "<image>"
// attachment marker rather than a "{...}" substitution.
inline constexpr std::array<std::string_view, 6> recognized_placeholders{
    "time", "question", "ground_truth", "prediction", "inquirer_question", "image",
};

using Bindings = std::map<std::string, std::string, std::less<>>;

struct PromptPair {
    std::optional<std::string> system_text;
    std::string user_text;
    // Byte offset in user_text where the image is attached.
    std::optional<std::size_t> image_slot;

    friend bool operator==(const PromptPair&, const PromptPair&) = default;
};

class MissingBinding : public Error {
public:
    explicit MissingBinding(std::string name);
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

class UnknownTemplate : public Error {
public:
    using Error::Error;
};

class MalformedTemplate : public Error {
public:
    using Error::Error;
};

// Placeholders referenced by a template body, in the order scanned.
// Throws MalformedTemplate on an unrecognized "{name}" token.
std::set<std::string> scan_placeholders(std::string_view body);

// Immutable set of template bodies, one per TemplateId.
class PromptRegistry {
public:
    // Reads "<id>.txt" for every TemplateId from the directory. Each file
    // carries two header lines, "id: <id>" and "placeholders: a, b", then
    // the verbatim body. Throws UnknownTemplate for a missing file and
    // MalformedTemplate for a bad header or body.
    static PromptRegistry load(const std::filesystem::path& dir);

    // Directory the build was configured with.
    static std::filesystem::path default_directory();

    // For tests: build from in-memory bodies. Declared placeholders are
    // taken from the scan.
    static PromptRegistry from_bodies(std::map<TemplateId, std::string> bodies);

    const std::string& body(TemplateId id) const;

    // Substitutes bindings into one template. System templates fill
    // system_text; user templates fill user_text. Throws MissingBinding
    // when a required placeholder has no binding and std::invalid_argument
    // on an unrecognized binding name.
    PromptPair render(TemplateId id, const Bindings& bindings) const;

    // System and user templates of a role combined. Roles without a system
    // template yield no system_text.
    PromptPair render_role(Role role, const Bindings& bindings) const;

    // Rescans every body. Throws MalformedTemplate when a body holds an
    // unrecognized placeholder or disagrees with its declared set.
    std::vector<std::pair<TemplateId, std::set<std::string>>> validate() const;

private:
    struct Entry {
        std::string body;
        std::set<std::string> declared;
    };

    explicit PromptRegistry(std::map<TemplateId, Entry> entries) : entries_(std::move(entries)) {}

    const Entry& entry(TemplateId id) const;

    std::map<TemplateId, Entry> entries_;
};

std::vector<std::pair<TemplateId, std::set<std::string>>> validate_registry(const PromptRegistry& registry);

}  // namespace vra::prompts
