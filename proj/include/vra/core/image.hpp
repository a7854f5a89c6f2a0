#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace vra {

enum class MediaType { png, jpeg, webp, bmp };

std::string_view to_string(MediaType type);
std::optional<MediaType> media_type_from_string(std::string_view name);
// Case-insensitive on the extension; ".jpg" and ".jpeg" both map to jpeg.
std::optional<MediaType> media_type_from_extension(const std::filesystem::path& path);
std::string_view mime_type(MediaType type);

// An image attached to a question: either a file on disk or bytes in
// memory, never both.
class ImageRef {
public:
    using Bytes = std::vector<std::uint8_t>;

    // Throws ImageDecodeError when the extension names no supported format.
    static ImageRef from_file(std::filesystem::path path);
    static ImageRef from_file(std::filesystem::path path, MediaType type);
    static ImageRef from_bytes(Bytes bytes, MediaType type);

    MediaType media_type() const { return media_type_; }
    bool is_file() const { return std::holds_alternative<std::filesystem::path>(source_); }
    const std::filesystem::path* path() const { return std::get_if<std::filesystem::path>(&source_); }

    // Reads the payload and checks its signature against media_type().
    // Throws ImageDecodeError on unreadable or mismatched content.
    Bytes load() const;

    // Short human-readable description for transcripts, never the payload.
    std::string describe() const;

    friend bool operator==(const ImageRef&, const ImageRef&) = default;

private:
    ImageRef(std::variant<std::filesystem::path, Bytes> source, MediaType type)
        : source_(std::move(source)), media_type_(type)
    {
    }

    std::variant<std::filesystem::path, Bytes> source_;
    MediaType media_type_;
};

// True when the leading bytes carry the signature of the given format.
bool has_signature(const ImageRef::Bytes& bytes, MediaType type);

}  // namespace vra
