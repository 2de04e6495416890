#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogniloc/bm25.hpp"
#include "cogniloc/errors.hpp"

namespace cogniloc {

enum class SegmentKind { method, constructor };

enum class EdgeKind { invokes, inherits };

inline std::string_view to_string(SegmentKind kind) {
    return kind == SegmentKind::method ? "method" : "constructor";
}

inline std::string_view to_string(EdgeKind kind) {
    return kind == EdgeKind::invokes ? "invokes" : "inherits";
}

/// A retrieval unit: one method or constructor with its source text.
struct CodeSegment {
    std::string id;
    SegmentKind kind = SegmentKind::method;
    std::string qualified_name;
    std::string signature;
    std::string document_path;
    int start_line = 1;
    int end_line = 1;
    std::string body;
};

struct Edge {
    std::string from;
    std::string to;
    EdgeKind kind = EdgeKind::invokes;
};

/// Directed heterogeneous graph over code segments for one (system, version),
/// with a BM25 index over segment bodies and qualified names. Validated and
/// immutable after construction; safe for concurrent readers.
class CodeGraph {
  public:
    CodeGraph(std::string system, std::string version, std::vector<CodeSegment> segments,
              std::vector<Edge> edges)
        : system_(std::move(system)), version_(std::move(version)), edges_(std::move(edges)) {
        for (auto& segment : segments) {
            validate_segment(segment);
            const std::string id = segment.id;
            if (!segments_.emplace(id, std::move(segment)).second) {
                throw DuplicateSegmentId(id);
            }
        }
        for (std::size_t i = 0; i < edges_.size(); ++i) {
            const Edge& edge = edges_[i];
            if (!segments_.count(edge.from) || !segments_.count(edge.to)) {
                throw DanglingEdge(edge.from, edge.to);
            }
            out_edges_[edge.from].push_back(i);
        }
        for (const auto& [id, segment] : segments_) {
            index_.add_document(id, segment.body + " " + segment.qualified_name);
        }
    }

    const std::string& system() const { return system_; }
    const std::string& version() const { return version_; }
    std::size_t segment_count() const { return segments_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::map<std::string, CodeSegment>& segments() const { return segments_; }
    const std::vector<Edge>& edges() const { return edges_; }

    bool contains(const std::string& id) const { return segments_.count(id) != 0; }

    const CodeSegment& segment(const std::string& id) const {
        const auto it = segments_.find(id);
        if (it == segments_.end()) {
            throw UnknownSegment(id);
        }
        return it->second;
    }

    /// Out-neighbors of `id` in edge declaration order, optionally restricted
    /// to one edge kind.
    std::vector<std::string> callees_of(const std::string& id,
                                        std::optional<EdgeKind> kind = std::nullopt) const {
        if (!contains(id)) {
            throw UnknownSegment(id);
        }
        std::vector<std::string> result;
        const auto it = out_edges_.find(id);
        if (it == out_edges_.end()) {
            return result;
        }
        for (const std::size_t edge_index : it->second) {
            const Edge& edge = edges_[edge_index];
            if (!kind || edge.kind == *kind) {
                result.push_back(edge.to);
            }
        }
        return result;
    }

    bool has_invokes_edge(const std::string& from, const std::string& to) const {
        const auto it = out_edges_.find(from);
        if (it == out_edges_.end()) {
            return false;
        }
        for (const std::size_t edge_index : it->second) {
            const Edge& edge = edges_[edge_index];
            if (edge.kind == EdgeKind::invokes && edge.to == to) {
                return true;
            }
        }
        return false;
    }

    std::vector<SearchHit> search(std::string_view query, std::size_t k) const {
        return index_.search(query, k);
    }

  private:
    static void validate_segment(const CodeSegment& segment) {
        if (segment.id.empty()) {
            throw MalformedFixture("segment with empty id");
        }
        if (segment.body.empty()) {
            throw MalformedFixture("segment " + segment.id + " has empty body");
        }
        if (segment.document_path.empty()) {
            throw MalformedFixture("segment " + segment.id + " has empty document_path");
        }
        if (segment.start_line < 1 || segment.start_line > segment.end_line) {
            throw MalformedFixture("segment " + segment.id + " has invalid line range");
        }
    }

    std::string system_;
    std::string version_;
    std::map<std::string, CodeSegment> segments_;
    std::vector<Edge> edges_;
    std::map<std::string, std::vector<std::size_t>> out_edges_;
    Bm25Index index_;
};

}  // namespace cogniloc
