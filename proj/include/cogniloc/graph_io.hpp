#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/code_graph.hpp"
#include "cogniloc/errors.hpp"

namespace cogniloc {

namespace detail {

inline nlohmann::json parse_json_or(const std::string& text, const std::string& what) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw MalformedFixture(what + " is not valid JSON");
    }
    return doc;
}

inline void reject_unknown_fields(const nlohmann::json& object, const std::set<std::string>& known,
                                  const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        (void)value;
        if (!known.count(key)) {
            throw MalformedFixture("unknown field '" + key + "' in " + where);
        }
    }
}

inline std::string require_string(const nlohmann::json& object, const std::string& key,
                                  const std::string& where) {
    if (!object.contains(key) || !object[key].is_string()) {
        throw MalformedFixture("missing or non-string field '" + key + "' in " + where);
    }
    return object[key].get<std::string>();
}

inline int require_int(const nlohmann::json& object, const std::string& key,
                       const std::string& where) {
    if (!object.contains(key) || !object[key].is_number_integer()) {
        throw MalformedFixture("missing or non-integer field '" + key + "' in " + where);
    }
    return object[key].get<int>();
}

inline SegmentKind parse_segment_kind(const std::string& text, const std::string& where) {
    if (text == "method") {
        return SegmentKind::method;
    }
    if (text == "constructor") {
        return SegmentKind::constructor;
    }
    throw MalformedFixture("unknown segment kind '" + text + "' in " + where);
}

inline EdgeKind parse_edge_kind(const std::string& text, const std::string& where) {
    if (text == "invokes") {
        return EdgeKind::invokes;
    }
    if (text == "inherits") {
        return EdgeKind::inherits;
    }
    throw MalformedFixture("unknown edge kind '" + text + "' in " + where);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoFailure("cannot read " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) {
        throw IoFailure("read error on " + path);
    }
    return buffer.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoFailure("cannot write " + path);
    }
    out << content;
    out.flush();
    if (!out) {
        throw IoFailure("write error on " + path);
    }
}

}  // namespace detail

/// Parses the graph-fixture document. The schema is closed: unknown fields
/// anywhere in the document are rejected.
inline CodeGraph parse_graph_fixture(const std::string& text) {
    using nlohmann::json;
    const json doc = detail::parse_json_or(text, "graph fixture");
    if (!doc.is_object()) {
        throw MalformedFixture("top level must be an object");
    }
    detail::reject_unknown_fields(doc, {"system", "version", "segments", "edges"}, "fixture");
    const std::string system = detail::require_string(doc, "system", "fixture");
    const std::string version = detail::require_string(doc, "version", "fixture");
    if (!doc.contains("segments") || !doc["segments"].is_array()) {
        throw MalformedFixture("missing segments array");
    }
    if (!doc.contains("edges") || !doc["edges"].is_array()) {
        throw MalformedFixture("missing edges array");
    }

    std::vector<CodeSegment> segments;
    for (const json& entry : doc["segments"]) {
        if (!entry.is_object()) {
            throw MalformedFixture("segment entry must be an object");
        }
        detail::reject_unknown_fields(entry,
                                      {"id", "kind", "qualified_name", "signature",
                                       "document_path", "start_line", "end_line", "body"},
                                      "segment");
        CodeSegment segment;
        segment.id = detail::require_string(entry, "id", "segment");
        segment.kind =
            detail::parse_segment_kind(detail::require_string(entry, "kind", "segment"), segment.id);
        segment.qualified_name = detail::require_string(entry, "qualified_name", "segment");
        segment.signature = detail::require_string(entry, "signature", "segment");
        segment.document_path = detail::require_string(entry, "document_path", "segment");
        segment.start_line = detail::require_int(entry, "start_line", "segment");
        segment.end_line = detail::require_int(entry, "end_line", "segment");
        segment.body = detail::require_string(entry, "body", "segment");
        segments.push_back(std::move(segment));
    }

    std::vector<Edge> edges;
    for (const json& entry : doc["edges"]) {
        if (!entry.is_object()) {
            throw MalformedFixture("edge entry must be an object");
        }
        detail::reject_unknown_fields(entry, {"from", "to", "kind"}, "edge");
        Edge edge;
        edge.from = detail::require_string(entry, "from", "edge");
        edge.to = detail::require_string(entry, "to", "edge");
        edge.kind = detail::parse_edge_kind(detail::require_string(entry, "kind", "edge"),
                                            edge.from + "->" + edge.to);
        edges.push_back(std::move(edge));
    }

    return CodeGraph(system, version, std::move(segments), std::move(edges));
}

inline CodeGraph build_graph(const std::string& fixture_path) {
    return parse_graph_fixture(detail::read_file(fixture_path));
}

inline nlohmann::json graph_to_json(const CodeGraph& graph) {
    using nlohmann::json;
    json segments = json::array();
    for (const auto& [id, segment] : graph.segments()) {
        segments.push_back({{"id", segment.id},
                            {"kind", std::string(to_string(segment.kind))},
                            {"qualified_name", segment.qualified_name},
                            {"signature", segment.signature},
                            {"document_path", segment.document_path},
                            {"start_line", segment.start_line},
                            {"end_line", segment.end_line},
                            {"body", segment.body}});
    }
    json edges = json::array();
    for (const Edge& edge : graph.edges()) {
        edges.push_back(
            {{"from", edge.from}, {"to", edge.to}, {"kind", std::string(to_string(edge.kind))}});
    }
    return json{{"format", "cogniloc.graph/1"},
                {"system", graph.system()},
                {"version", graph.version()},
                {"segments", std::move(segments)},
                {"edges", std::move(edges)}};
}

inline void save_graph(const CodeGraph& graph, const std::string& path) {
    detail::write_file(path, graph_to_json(graph).dump(2) + "\n");
}

/// Loads a persisted graph. The lexical index is rebuilt from the stored
/// segments, which reproduces search scores bit for bit.
inline CodeGraph load_graph(const std::string& path) {
    const std::string text = detail::read_file(path);
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw CorruptIndex(path + " is not a graph file");
    }
    if (!doc.contains("format") || doc["format"] != "cogniloc.graph/1") {
        throw CorruptIndex(path + " has missing or unsupported format marker");
    }
    doc.erase("format");
    try {
        return parse_graph_fixture(doc.dump());
    } catch (const Error& error) {
        throw CorruptIndex(path + ": " + error.what());
    }
}

}  // namespace cogniloc
