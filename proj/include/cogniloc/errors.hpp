#pragma once

#include <stdexcept>
#include <string>

namespace cogniloc {

/// Base class for every error this library throws.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string& what): std::runtime_error(what) {}
};

// -- graph / index -----------------------------------------------------------

class MalformedFixture : public Error {
  public:
    explicit MalformedFixture(const std::string& detail): Error("malformed fixture: " + detail) {}
};

class DuplicateSegmentId : public Error {
  public:
    explicit DuplicateSegmentId(std::string id)
        : Error("duplicate segment id: " + id), id_(std::move(id)) {}
    const std::string& id() const { return id_; }

  private:
    std::string id_;
};

class DanglingEdge : public Error {
  public:
    DanglingEdge(std::string from, std::string to)
        : Error("dangling edge: " + from + " -> " + to),
          from_(std::move(from)),
          to_(std::move(to)) {}
    const std::string& from() const { return from_; }
    const std::string& to() const { return to_; }

  private:
    std::string from_;
    std::string to_;
};

class UnknownSegment : public Error {
  public:
    explicit UnknownSegment(std::string id)
        : Error("unknown segment: " + id), id_(std::move(id)) {}
    const std::string& id() const { return id_; }

  private:
    std::string id_;
};

class EmptyQuery : public Error {
  public:
    EmptyQuery(): Error("query is empty after tokenization") {}
};

class IoFailure : public Error {
  public:
    explicit IoFailure(const std::string& detail): Error("io failure: " + detail) {}
};

class CorruptIndex : public Error {
  public:
    explicit CorruptIndex(const std::string& detail): Error("corrupt index: " + detail) {}
};

// -- agent backend ------------------------------------------------------------

/// Base for failures of a completion backend; pipeline stages catch this to
/// apply their per-stage degradation rules.
class BackendError : public Error {
  public:
    explicit BackendError(const std::string& what): Error(what) {}
};

class BackendUnavailable : public BackendError {
  public:
    explicit BackendUnavailable(const std::string& detail)
        : BackendError("backend unavailable: " + detail) {}
};

class SchemaViolation : public BackendError {
  public:
    explicit SchemaViolation(const std::string& detail)
        : BackendError("schema violation: " + detail) {}
};

class MissingScriptEntry : public BackendError {
  public:
    explicit MissingScriptEntry(const std::string& detail)
        : BackendError("missing script entry: " + detail) {}
};

class MalformedScript : public Error {
  public:
    explicit MalformedScript(const std::string& detail): Error("malformed script: " + detail) {}
};

class ScoreOutOfRange : public Error {
  public:
    explicit ScoreOutOfRange(const std::string& detail)
        : Error("score out of range: " + detail) {}
};

class MissingContextField : public Error {
  public:
    explicit MissingContextField(std::string name)
        : Error("missing context field: " + name), name_(std::move(name)) {}
    const std::string& name() const { return name_; }

  private:
    std::string name_;
};

// -- pipeline ------------------------------------------------------------------

class EmptyReport : public Error {
  public:
    explicit EmptyReport(const std::string& bug_id)
        : Error("bug report has empty title and description: " + bug_id) {}
};

class PruneTargetAbsent : public Error {
  public:
    explicit PruneTargetAbsent(const std::string& id)
        : Error("prune target not in scratchpad: " + id) {}
};

/// A later pipeline stage attempted to overwrite state written by an earlier
/// stage. Always a defect in the caller.
class StageOverwrite : public Error {
  public:
    explicit StageOverwrite(const std::string& field)
        : Error("pipeline stage field written twice: " + field) {}
};

// -- evaluation -----------------------------------------------------------------

class EmptyGroundTruth : public Error {
  public:
    EmptyGroundTruth(): Error("ground-truth set is empty") {}
};

class NoQueries : public Error {
  public:
    NoQueries(): Error("no queries to evaluate") {}
};

class MissingGroundTruth : public Error {
  public:
    explicit MissingGroundTruth(std::string bug_id)
        : Error("missing ground truth for bug: " + bug_id), bug_id_(std::move(bug_id)) {}
    const std::string& bug_id() const { return bug_id_; }

  private:
    std::string bug_id_;
};

class GranularityMismatch : public Error {
  public:
    explicit GranularityMismatch(const std::string& detail)
        : Error("granularity mismatch: " + detail) {}
};

class AllDifferencesZero : public Error {
  public:
    AllDifferencesZero(): Error("all paired differences are zero") {}
};

class TooFewPairs : public Error {
  public:
    explicit TooFewPairs(std::size_t n)
        : Error("too few non-zero pairs for signed-rank test: " + std::to_string(n)) {}
};

class EmptySample : public Error {
  public:
    EmptySample(): Error("effect size requires non-empty samples") {}
};

}  // namespace cogniloc
