#pragma once

#include "vra/gateway/mock_script.hpp"

#include <memory>
#include <string>

namespace vra::test {

inline gateway::BackendConfig mock_backend(const std::string& id, const std::string& script_json)
{
    gateway::BackendConfig config;
    config.backend_id = id;
    config.kind = gateway::BackendKind::mock;
    config.script = std::make_shared<const gateway::MockScript>(gateway::MockScript::parse(script_json, id));
    return config;
}

}  // namespace vra::test
