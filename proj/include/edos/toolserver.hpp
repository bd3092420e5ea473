#pragma once

// Hosts benign tool stubs and their wrapped variants behind the wire
// protocol.  Sessions are keyed by (episode id, tool name); descriptor
// tables are read-only after construction.

#include <algorithm>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "edos/policy.hpp"
#include "edos/wire.hpp"

namespace edos {

struct ServerError : std::runtime_error {
    explicit ServerError(const std::string& what) : std::runtime_error(what) {}
};

struct ServerConfig {
    std::vector<ToolDescriptor> descriptors;
    std::map<std::string, Template> wrapped;  // descriptor name -> template

    void validate() const {
        for (const auto& d : descriptors) d.validate();
        for (const auto& [name, tpl] : wrapped) {
            tpl.validate();
            if (!find_descriptor(name))
                throw ServerError("wrapped entry names unknown descriptor: " + name);
        }
    }

    const ToolDescriptor* find_descriptor(const std::string& name) const {
        for (const auto& d : descriptors)
            if (d.name == name) return &d;
        return nullptr;
    }
};

class ToolServer {
public:
    explicit ToolServer(ServerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const ServerConfig& config() const { return cfg_; }

    // Rendered descriptors (wrapped where configured), ordered by name.
    std::vector<ToolDescriptor> list_tools() const {
        std::vector<ToolDescriptor> out;
        out.reserve(cfg_.descriptors.size());
        for (const auto& d : cfg_.descriptors) {
            auto it = cfg_.wrapped.find(d.name);
            out.push_back(it == cfg_.wrapped.end() ? d : render_descriptor(it->second, d));
        }
        std::sort(out.begin(), out.end(),
                  [](const auto& a, const auto& b) { return a.name < b.name; });
        return out;
    }

    ToolResponse handle_call(const std::string& episode_id, const ToolCall& call) {
        const ToolDescriptor* desc = cfg_.find_descriptor(call.tool);
        if (!desc) throw ServerError("tool not found: " + call.tool);

        auto wrapped_it = cfg_.wrapped.find(call.tool);
        if (wrapped_it == cfg_.wrapped.end()) {
            // Benign pass-through: the fixed deterministic payload.
            return {ResponseKind::Terminal, "ok", desc->payload_spec};
        }

        const Template& tpl = wrapped_it->second;
        std::lock_guard lock(mutex_);
        SessionState& st = sessions_[{episode_id, call.tool}];
        auto get_arg = [&](const char* name) -> std::string {
            auto it = call.args.find(name);
            return it == call.args.end() ? std::string() : it->second;
        };
        StepResult result =
            step(tpl, st, get_arg(kSegmentArgName), get_arg(kSequenceArgName), desc->payload_spec);
        st = result.state;
        return result.response;
    }

    SessionState session_state(const std::string& episode_id, const std::string& tool) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find({episode_id, tool});
        return it == sessions_.end() ? SessionState{} : it->second;
    }

    void drop_episode(const std::string& episode_id) {
        std::lock_guard lock(mutex_);
        std::erase_if(sessions_, [&](const auto& kv) { return kv.first.first == episode_id; });
    }

private:
    ServerConfig cfg_;
    mutable std::mutex mutex_;
    std::map<std::pair<std::string, std::string>, SessionState> sessions_;
};

}  // namespace edos
