#include "vra/core/image.hpp"

#include "vra/core/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>

namespace vra {

std::string_view to_string(MediaType type)
{
    switch (type)
    {
        case MediaType::png: return "png";
        case MediaType::jpeg: return "jpeg";
        case MediaType::webp: return "webp";
        case MediaType::bmp: return "bmp";
    }
    return "png";
}

std::optional<MediaType> media_type_from_string(std::string_view name)
{
    if (name == "png")
        return MediaType::png;
    if (name == "jpeg" || name == "jpg")
        return MediaType::jpeg;
    if (name == "webp")
        return MediaType::webp;
    if (name == "bmp")
        return MediaType::bmp;
    return std::nullopt;
}

std::optional<MediaType> media_type_from_extension(const std::filesystem::path& path)
{
    auto ext = path.extension().string();
    if (ext.empty())
        return std::nullopt;
    ext.erase(0, 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return media_type_from_string(ext);
}

std::string_view mime_type(MediaType type)
{
    switch (type)
    {
        case MediaType::png: return "image/png";
        case MediaType::jpeg: return "image/jpeg";
        case MediaType::webp: return "image/webp";
        case MediaType::bmp: return "image/bmp";
    }
    return "application/octet-stream";
}

ImageRef ImageRef::from_file(std::filesystem::path path)
{
    auto const type = media_type_from_extension(path);
    if (!type)
        throw ImageDecodeError(fmt::format("unsupported image format: {}", path.string()));
    return ImageRef(std::move(path), *type);
}

ImageRef ImageRef::from_file(std::filesystem::path path, MediaType type)
{
    return ImageRef(std::move(path), type);
}

ImageRef ImageRef::from_bytes(Bytes bytes, MediaType type)
{
    return ImageRef(std::move(bytes), type);
}

bool has_signature(const ImageRef::Bytes& bytes, MediaType type)
{
    auto starts_with = [&](std::initializer_list<std::uint8_t> magic, std::size_t offset = 0) {
        return bytes.size() >= offset + magic.size() && std::equal(magic.begin(), magic.end(), bytes.begin() + offset);
    };
    switch (type)
    {
        case MediaType::png: return starts_with({0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A});
        case MediaType::jpeg: return starts_with({0xFF, 0xD8, 0xFF});
        case MediaType::webp: return starts_with({'R', 'I', 'F', 'F'}) && starts_with({'W', 'E', 'B', 'P'}, 8);
        case MediaType::bmp: return starts_with({'B', 'M'});
    }
    return false;
}

ImageRef::Bytes ImageRef::load() const
{
    Bytes bytes;
    if (auto const* p = path())
    {
        std::ifstream in(*p, std::ios::binary);
        if (!in)
            throw ImageDecodeError(fmt::format("cannot read image '{}'", p->string()));
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
        if (in.bad())
            throw ImageDecodeError(fmt::format("cannot read image '{}'", p->string()));
    }
    else
    {
        bytes = std::get<Bytes>(source_);
    }

    if (!has_signature(bytes, media_type_))
        throw ImageDecodeError(fmt::format("{} is not a valid {} image", describe(), to_string(media_type_)));
    return bytes;
}

std::string ImageRef::describe() const
{
    if (auto const* p = path())
        return p->string();
    return fmt::format("<{} bytes of {}>", std::get<Bytes>(source_).size(), to_string(media_type_));
}

}  // namespace vra
