#pragma once

#include "vra/gateway/types.hpp"

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vra::gateway {

// Scripted replies for a mock backend.
//
// A script is a JSON document:
//
//   {
//     "backend_id": "mock-geo",          optional, defaults to the file stem
//     "delay_ms": 0,                     optional latency for every call
//     "default": "text",                 optional reply for anything unmatched
//     "rules": [
//       {"role": "captioner", "reply": "..."},
//       {"role": "revisor", "ordinal": 2, "reply": "..."},
//       {"role": "vision_suite", "question": "How many planes?", "reply": "3", "delay_ms": 40},
//       {"role": "vision_suite", "question": "Is it?", "fail": "timeout"}
//     ]
//   }
//
// A rule matches on role plus its optional ordinal and question keys; the
// most specific match wins. "fail" is one of timeout, transport, empty or
// status:<code>. Every role a script mentions needs a keyless fallback rule
// unless "default" is set, so the script answers every call it can see.
class MockScript {
public:
    struct Outcome {
        std::optional<std::string> reply;
        std::optional<std::string> failure;
        std::chrono::milliseconds delay{0};
    };

    static MockScript parse(std::string_view json_text, std::string fallback_id = "mock");
    static MockScript load(const std::filesystem::path& path);

    const std::string& backend_id() const { return backend_id_; }

    // Pure function of (role, ordinal, question). Throws ScriptParseError
    // when the script has nothing for the call.
    Outcome lookup(const CallContext& ctx) const;

private:
    struct Rule {
        Role role;
        std::optional<int> ordinal;
        std::optional<std::string> question;
        std::optional<std::string> reply;
        std::optional<std::string> failure;
        std::optional<std::chrono::milliseconds> delay;
    };

    std::string backend_id_;
    std::chrono::milliseconds delay_{0};
    std::optional<std::string> default_reply_;
    std::vector<Rule> rules_;
};

// Loads and validates a script, returning a ready mock backend config.
// Throws ScriptParseError.
BackendConfig mock_from_script(const std::filesystem::path& path);

}  // namespace vra::gateway
