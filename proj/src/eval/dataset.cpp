#include "vra/eval/harness.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

namespace vra::eval {

using nlohmann::json;

namespace {

std::string required_text(const json& obj, const char* field, int line)
{
    auto it = obj.find(field);
    if (it == obj.end())
        throw SchemaError(line, fmt::format("missing field \"{}\"", field));
    if (!it->is_string())
        throw SchemaError(line, fmt::format("field \"{}\" must be a string", field));
    auto value = it->get<std::string>();
    if (value.find_first_not_of(" \t\r\n") == std::string::npos)
        throw SchemaError(line, fmt::format("field \"{}\" is empty", field));
    return value;
}

// Uniform draw from [0, bound) by rejection, so the sequence depends only
// on the engine and not on the standard library's distribution code.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound)
{
    auto const limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    for (;;)
    {
        auto const x = rng();
        if (x < limit)
            return x % bound;
    }
}

}  // namespace

LineError::LineError(int line, const std::string& message)
    : Error(fmt::format("line {}: {}", line, message)), line_(line)
{
}

bool is_known_type(std::string_view type)
{
    return std::find(known_types.begin(), known_types.end(), type) != known_types.end();
}

std::vector<std::string> column_order(const std::vector<std::string>& types)
{
    std::vector<std::string> out;
    for (auto const known : known_types)
        if (std::find(types.begin(), types.end(), known) != types.end())
            out.emplace_back(known);
    std::set<std::string> extra;
    for (auto const& t : types)
        if (!is_known_type(t))
            extra.insert(t);
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

VqaTask to_task(const EvalRecord& record)
{
    return VqaTask{record.record_id, record.image, record.question, record.question_type, record.ground_truth};
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError(fmt::format("cannot open dataset '{}'", path.string()));

    auto const base = path.parent_path();
    std::vector<EvalRecord> records;
    std::set<std::string> ids;
    std::set<std::string> warned;
    std::string text;
    int line = 0;
    while (std::getline(in, text))
    {
        ++line;
        if (text.find_first_not_of(" \t\r\n") == std::string::npos)
            continue;
        json obj;
        try
        {
            obj = json::parse(text);
        }
        catch (const json::exception&)
        {
            throw SchemaError(line, "not a JSON object");
        }
        if (!obj.is_object())
            throw SchemaError(line, "not a JSON object");

        EvalRecord rec{
            .record_id = fmt::format("{:06}", line),
            .image = ImageRef::from_bytes({}, MediaType::png),
            .question = required_text(obj, "question", line),
            .ground_truth = required_text(obj, "ground_truth", line),
            .question_type = required_text(obj, "type", line),
        };
        if (rec.question_type == "overall")
            throw SchemaError(line, "\"overall\" is reserved for the report column");
        if (auto it = obj.find("id"); it != obj.end())
        {
            if (it->is_string())
                rec.record_id = it->get<std::string>();
            else if (it->is_number_integer())
                rec.record_id = std::to_string(it->get<long long>());
            else
                throw SchemaError(line, "field \"id\" must be a string or integer");
            if (rec.record_id.empty())
                throw SchemaError(line, "field \"id\" is empty");
        }
        if (!ids.insert(rec.record_id).second)
            throw SchemaError(line, fmt::format("duplicate id '{}'", rec.record_id));

        auto image_path = std::filesystem::path(required_text(obj, "image_path", line));
        if (image_path.is_relative())
            image_path = base / image_path;
        std::error_code ec;
        if (!std::filesystem::is_regular_file(image_path, ec))
            throw ImageRefError(line, fmt::format("image '{}' does not exist", image_path.string()));
        try
        {
            rec.image = ImageRef::from_file(image_path);
        }
        catch (const ImageDecodeError& e)
        {
            throw ImageRefError(line, e.what());
        }

        if (!is_known_type(rec.question_type) && warned.insert(rec.question_type).second)
            spdlog::warn("{}:{}: unknown question type '{}'", path.string(), line, rec.question_type);
        records.push_back(std::move(rec));
    }
    if (in.bad())
        throw IoError(fmt::format("failed reading dataset '{}'", path.string()));
    return records;
}

std::vector<EvalRecord> sample_per_type(const std::vector<EvalRecord>& records, int n, std::uint64_t seed)
{
    if (n < 1)
        throw std::invalid_argument("sample size must be at least 1");

    std::map<std::string, std::vector<const EvalRecord*>> by_type;
    for (auto const& r : records)
        by_type[r.question_type].push_back(&r);

    std::mt19937_64 rng(seed);
    std::vector<EvalRecord> out;
    for (auto& [type, group] : by_type)
    {
        std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->record_id < b->record_id; });
        auto const take = std::min<std::size_t>(group.size(), std::size_t(n));
        if (group.size() < std::size_t(n))
            spdlog::warn("type '{}' has {} records, fewer than the {} requested; taking all", type, group.size(), n);
        else
            // Partial Fisher-Yates: the first `take` slots end up a uniform sample.
            for (std::size_t i = 0; i < take; ++i)
                std::swap(group[i], group[i + uniform_below(rng, group.size() - i)]);

        std::vector<const EvalRecord*> chosen(group.begin(), group.begin() + std::ptrdiff_t(take));
        std::sort(chosen.begin(), chosen.end(), [](auto* a, auto* b) { return a->record_id < b->record_id; });
        for (auto const* r : chosen)
            out.push_back(*r);
    }
    return out;
}

}  // namespace vra::eval
