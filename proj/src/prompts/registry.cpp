#include "vra/prompts/registry.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef VRA_TEMPLATE_DIR
#define VRA_TEMPLATE_DIR "assets/templates"
#endif

namespace vra::prompts {

namespace {

constexpr std::string_view image_marker = "<image>";

constexpr std::array template_names{
    std::string_view{"captioner_user"}, std::string_view{"drafter_system"},   std::string_view{"drafter_user"},
    std::string_view{"inquirer_user"},  std::string_view{"vision_user"},      std::string_view{"revisor_system"},
    std::string_view{"revisor_user"},   std::string_view{"spokesman_system"}, std::string_view{"spokesman_user"},
    std::string_view{"judge_user"},
};

bool is_recognized(std::string_view name)
{
    return std::find(recognized_placeholders.begin(), recognized_placeholders.end(), name) !=
           recognized_placeholders.end();
}

bool is_name_char(char c)
{
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_system(TemplateId id)
{
    return id == TemplateId::drafter_system || id == TemplateId::revisor_system ||
           id == TemplateId::spokesman_system;
}

// A "{name}" token starting at pos, or nothing when the brace is literal.
std::optional<std::string_view> placeholder_at(std::string_view body, std::size_t pos)
{
    if (body[pos] != '{')
        return std::nullopt;
    auto end = pos + 1;
    while (end < body.size() && is_name_char(body[end]))
        ++end;
    if (end == pos + 1 || end >= body.size() || body[end] != '}')
        return std::nullopt;
    return body.substr(pos + 1, end - pos - 1);
}

std::string trim(std::string_view s)
{
    auto const first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    auto const last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::set<std::string> parse_declared(std::string_view line)
{
    std::set<std::string> names;
    std::size_t pos = 0;
    while (pos <= line.size())
    {
        auto const comma = std::min(line.find(',', pos), line.size());
        auto name = trim(line.substr(pos, comma - pos));
        if (!name.empty())
            names.insert(std::move(name));
        pos = comma + 1;
    }
    return names;
}

std::optional<std::string_view> strip_prefix(std::string_view line, std::string_view prefix)
{
    if (line.substr(0, prefix.size()) != prefix)
        return std::nullopt;
    return line.substr(prefix.size());
}

}  // namespace

MissingBinding::MissingBinding(std::string name)
    : Error(fmt::format("missing binding for placeholder '{}'", name)), name_(std::move(name))
{
}

std::string_view to_string(TemplateId id)
{
    return template_names[std::size_t(id)];
}

std::optional<TemplateId> template_id_from_string(std::string_view name)
{
    for (std::size_t i = 0; i < template_names.size(); ++i)
        if (template_names[i] == name)
            return TemplateId(i);
    return std::nullopt;
}

std::set<std::string> scan_placeholders(std::string_view body)
{
    std::set<std::string> found;
    for (std::size_t pos = 0; pos < body.size(); ++pos)
    {
        if (body.substr(pos, image_marker.size()) == image_marker)
        {
            found.insert("image");
            pos += image_marker.size() - 1;
            continue;
        }
        if (auto const name = placeholder_at(body, pos))
        {
            if (!is_recognized(*name) || *name == "image")
                throw MalformedTemplate(fmt::format("unrecognized placeholder '{{{}}}'", *name));
            found.emplace(*name);
            pos += name->size() + 1;
        }
    }
    return found;
}

std::filesystem::path PromptRegistry::default_directory()
{
    return VRA_TEMPLATE_DIR;
}

PromptRegistry PromptRegistry::load(const std::filesystem::path& dir)
{
    std::map<TemplateId, Entry> entries;
    for (auto const id : all_template_ids)
    {
        auto const path = dir / fmt::format("{}.txt", to_string(id));
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw UnknownTemplate(fmt::format("template '{}' not found at {}", to_string(id), path.string()));
        std::stringstream content;
        content << in.rdbuf();
        auto text = content.str();

        auto const first_nl = text.find('\n');
        auto const second_nl = first_nl == std::string::npos ? first_nl : text.find('\n', first_nl + 1);
        if (second_nl == std::string::npos)
            throw MalformedTemplate(fmt::format("{}: missing header", path.string()));

        auto const id_line = std::string_view(text).substr(0, first_nl);
        auto const ph_line = std::string_view(text).substr(first_nl + 1, second_nl - first_nl - 1);
        auto const declared_id = strip_prefix(id_line, "id:");
        auto const declared_ph = strip_prefix(ph_line, "placeholders:");
        if (!declared_id || trim(*declared_id) != to_string(id) || !declared_ph)
            throw MalformedTemplate(fmt::format("{}: bad header", path.string()));

        auto body = text.substr(second_nl + 1);
        if (!body.empty() && body.back() == '\n')
            body.pop_back();
        entries.emplace(id, Entry{std::move(body), parse_declared(*declared_ph)});
    }

    PromptRegistry registry(std::move(entries));
    registry.validate();
    return registry;
}

PromptRegistry PromptRegistry::from_bodies(std::map<TemplateId, std::string> bodies)
{
    std::map<TemplateId, Entry> entries;
    for (auto& [id, body] : bodies)
    {
        auto declared = scan_placeholders(body);
        entries.emplace(id, Entry{std::move(body), std::move(declared)});
    }
    return PromptRegistry(std::move(entries));
}

const PromptRegistry::Entry& PromptRegistry::entry(TemplateId id) const
{
    auto const it = entries_.find(id);
    if (it == entries_.end())
        throw UnknownTemplate(fmt::format("template '{}' is not registered", to_string(id)));
    return it->second;
}

const std::string& PromptRegistry::body(TemplateId id) const
{
    return entry(id).body;
}

PromptPair PromptRegistry::render(TemplateId id, const Bindings& bindings) const
{
    for (auto const& [name, value] : bindings)
        if (!is_recognized(name))
            throw std::invalid_argument(fmt::format("unknown binding '{}'", name));

    std::string_view const body = entry(id).body;
    for (auto const& name : scan_placeholders(body))
        if (!bindings.contains(name))
            throw MissingBinding(name);

    PromptPair out;
    std::string text;
    text.reserve(body.size());
    for (std::size_t pos = 0; pos < body.size(); ++pos)
    {
        if (body.substr(pos, image_marker.size()) == image_marker)
        {
            out.image_slot = text.size();
            pos += image_marker.size() - 1;
            // The separator after the marker belongs to the marker.
            if (pos + 1 < body.size() && body[pos + 1] == ' ')
                ++pos;
            continue;
        }
        if (auto const name = placeholder_at(body, pos))
        {
            text += bindings.find(*name)->second;
            pos += name->size() + 1;
            continue;
        }
        text += body[pos];
    }

    if (is_system(id))
        out.system_text = std::move(text);
    else
        out.user_text = std::move(text);
    return out;
}

PromptPair PromptRegistry::render_role(Role role, const Bindings& bindings) const
{
    auto pair_of = [&](std::optional<TemplateId> system, TemplateId user) {
        auto out = render(user, bindings);
        if (system)
            out.system_text = render(*system, bindings).system_text;
        return out;
    };

    switch (role)
    {
        case Role::captioner: return pair_of(std::nullopt, TemplateId::captioner_user);
        case Role::drafter: return pair_of(TemplateId::drafter_system, TemplateId::drafter_user);
        case Role::inquirer: return pair_of(std::nullopt, TemplateId::inquirer_user);
        case Role::vision_suite: return pair_of(std::nullopt, TemplateId::vision_user);
        case Role::revisor: return pair_of(TemplateId::revisor_system, TemplateId::revisor_user);
        case Role::spokesman: return pair_of(TemplateId::spokesman_system, TemplateId::spokesman_user);
        case Role::judge: return pair_of(std::nullopt, TemplateId::judge_user);
    }
    throw UnknownTemplate("no template for role");
}

std::vector<std::pair<TemplateId, std::set<std::string>>> PromptRegistry::validate() const
{
    std::vector<std::pair<TemplateId, std::set<std::string>>> out;
    for (auto const& [id, e] : entries_)
    {
        auto found = scan_placeholders(e.body);
        if (found != e.declared)
            throw MalformedTemplate(fmt::format("template '{}' declares {{{}}} but uses {{{}}}", to_string(id),
                                                fmt::join(e.declared, ", "), fmt::join(found, ", ")));
        out.emplace_back(id, std::move(found));
    }
    return out;
}

std::vector<std::pair<TemplateId, std::set<std::string>>> validate_registry(const PromptRegistry& registry)
{
    return registry.validate();
}

}  // namespace vra::prompts
