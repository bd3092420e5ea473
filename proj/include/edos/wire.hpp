#pragma once

// Newline-delimited message framing for the tool-call subset of an
// MCP-style protocol: one JSON object per line, self-delimiting by
// construction.  Not interoperable with production MCP clients.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace edos {

struct WireError : std::runtime_error {
    explicit WireError(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : WireError {
    std::size_t offset;
    ParseError(const std::string& what, std::size_t off)
        : WireError(what + " (offset " + std::to_string(off) + ")"), offset(off) {}
};

struct ArgSpec {
    std::string name;
    std::string kind;  // scalar kind label, e.g. "string", "int", "float"
    std::string description;

    bool operator==(const ArgSpec&) const = default;
};

struct ToolDescriptor {
    std::string name;
    std::string function_id;
    std::vector<ArgSpec> arg_schema;
    std::string doc_text;
    std::string payload_spec;  // fixed deterministic placeholder payload

    bool operator==(const ToolDescriptor&) const = default;

    void validate() const {
        auto no_ws = [](const std::string& s) {
            if (s.empty()) return false;
            for (char c : s)
                if (c == ' ' || c == '\t' || c == '\n' || c == '\r') return false;
            return true;
        };
        if (!no_ws(name)) throw WireError("descriptor name empty or contains whitespace");
        if (!no_ws(function_id)) throw WireError("descriptor function_id empty or contains whitespace");
        for (std::size_t i = 0; i < arg_schema.size(); ++i)
            for (std::size_t j = i + 1; j < arg_schema.size(); ++j)
                if (arg_schema[i].name == arg_schema[j].name)
                    throw WireError("duplicate arg name: " + arg_schema[i].name);
    }

    bool has_arg(std::string_view arg) const {
        for (const auto& a : arg_schema)
            if (a.name == arg) return true;
        return false;
    }
};

struct ToolCall {
    std::string tool;
    std::map<std::string, std::string> args;
    int turn_index = 1;

    bool operator==(const ToolCall&) const = default;
};

enum class ResponseKind { Progress, Repair, Terminal };

inline const char* to_string(ResponseKind k) {
    switch (k) {
        case ResponseKind::Progress: return "progress";
        case ResponseKind::Repair: return "repair";
        case ResponseKind::Terminal: return "terminal";
    }
    return "?";
}

struct ToolResponse {
    ResponseKind kind = ResponseKind::Progress;
    std::string text;
    std::optional<std::string> payload;  // present iff kind == Terminal

    bool operator==(const ToolResponse&) const = default;

    void validate() const {
        if (kind == ResponseKind::Terminal && !payload)
            throw WireError("payload required for Terminal");
        if (kind != ResponseKind::Terminal && payload)
            throw WireError(std::string("payload forbidden for ") + to_string(kind));
    }
};

using Message = std::variant<ToolCall, ToolResponse>;

inline std::string encode_message(const Message& msg) {
    nlohmann::json j;
    if (const auto* call = std::get_if<ToolCall>(&msg)) {
        if (call->tool.empty()) throw WireError("encoding error: tool is empty");
        if (call->turn_index < 1) throw WireError("encoding error: turn_index must be positive");
        j["type"] = "call";
        j["tool"] = call->tool;
        j["args"] = call->args;
        j["turn_index"] = call->turn_index;
    } else {
        const auto& resp = std::get<ToolResponse>(msg);
        resp.validate();
        j["type"] = "response";
        j["kind"] = to_string(resp.kind);
        j["text"] = resp.text;
        if (resp.payload) j["payload"] = *resp.payload;
    }
    return j.dump() + "\n";
}

inline Message decode_message(std::string_view raw) {
    // Strip the single trailing newline, if present.
    if (!raw.empty() && raw.back() == '\n') raw.remove_suffix(1);
    if (raw.empty()) throw ParseError("empty message", 0);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed message: ") + e.what(),
                         e.byte > 0 ? e.byte - 1 : 0);
    }
    if (!j.is_object() || !j.contains("type"))
        throw ParseError("message is not an object with a type field", 0);
    const std::string type = j.at("type").get<std::string>();
    if (type == "call") {
        ToolCall call;
        call.tool = j.at("tool").get<std::string>();
        call.args = j.at("args").get<std::map<std::string, std::string>>();
        call.turn_index = j.at("turn_index").get<int>();
        if (call.turn_index < 1) throw WireError("turn_index must be positive");
        return call;
    }
    if (type == "response") {
        ToolResponse resp;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "progress") resp.kind = ResponseKind::Progress;
        else if (kind == "repair") resp.kind = ResponseKind::Repair;
        else if (kind == "terminal") resp.kind = ResponseKind::Terminal;
        else throw WireError("unknown response kind: " + kind);
        resp.text = j.at("text").get<std::string>();
        if (j.contains("payload")) resp.payload = j.at("payload").get<std::string>();
        resp.validate();
        return resp;
    }
    throw WireError("unknown message type: " + type);
}

// Splits a byte stream into complete newline-terminated records and decodes
// each.  A trailing partial line (no newline) is a framing error.
inline std::vector<Message> decode_stream(std::string_view raw) {
    std::vector<Message> out;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        const std::size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos)
            throw ParseError("unterminated record", pos);
        out.push_back(decode_message(raw.substr(pos, nl - pos)));
        pos = nl + 1;
    }
    return out;
}

// JSON (de)serialization of descriptors, shared by the corpus loader and
// the CLI wrap command.
inline nlohmann::json to_json(const ToolDescriptor& d) {
    nlohmann::json args = nlohmann::json::array();
    for (const auto& a : d.arg_schema)
        args.push_back({{"name", a.name}, {"kind", a.kind}, {"description", a.description}});
    return {{"name", d.name},
            {"function_id", d.function_id},
            {"arg_schema", args},
            {"doc_text", d.doc_text},
            {"payload_spec", d.payload_spec}};
}

inline ToolDescriptor descriptor_from_json(const nlohmann::json& j) {
    ToolDescriptor d;
    d.name = j.at("name").get<std::string>();
    d.function_id = j.at("function_id").get<std::string>();
    for (const auto& a : j.at("arg_schema"))
        d.arg_schema.push_back({a.at("name").get<std::string>(),
                                a.at("kind").get<std::string>(),
                                a.at("description").get<std::string>()});
    d.doc_text = j.at("doc_text").get<std::string>();
    d.payload_spec = j.at("payload_spec").get<std::string>();
    d.validate();
    return d;
}

}  // namespace edos
