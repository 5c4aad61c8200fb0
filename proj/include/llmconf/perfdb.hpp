// Copyright (c) 2026 The llmconf Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmconf/hardware.hpp"
#include "llmconf/operator.hpp"

namespace llmconf {

inline constexpr std::string_view kPerfDbSchema = "llmconf-perfdb/1";

enum class Provenance : std::uint8_t { kMeasured, kSynthetic };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

struct OperatorRecord {
  OperatorQuery query;
  double latency_us = 0;
  Provenance provenance = Provenance::kMeasured;

  friend bool operator==(const OperatorRecord&, const OperatorRecord&) = default;
};

// What happens when a query coordinate leaves the grid's bounding box.
enum class Extrapolation : std::uint8_t {
  kStrict,  // ExtrapolationError
  kClamp,   // use the nearest edge value
  kSol,     // edge value scaled by sol_estimate(query) / sol_estimate(edge)
};

struct ExtrapolationPolicy {
  Extrapolation below = Extrapolation::kClamp;
  Extrapolation above = Extrapolation::kSol;
};

Extrapolation parse_extrapolation(std::string_view s);

// Raw, unindexed database contents as read from a file. May violate invariants;
// validate_db() reports them.
struct DbContents {
  HardwareSpec hardware;
  std::string backend;
  std::string backend_version;
  std::vector<OperatorRecord> records;
  std::optional<std::filesystem::path> source;  // set when read from disk
};

struct Finding {
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> violations;  // invariant breaches
  std::vector<Finding> gaps;        // required operators without a grid

  bool ok() const { return violations.empty() && gaps.empty(); }
};

// Immutable, indexed operator-latency store. Copies share the index.
class PerfDatabase {
 public:
  // Validates every invariant and builds the per-key grids. Throws
  // ValidationError naming the first offending record.
  static PerfDatabase build(DbContents contents, ExtrapolationPolicy policy = {});

  const HardwareSpec& hardware() const;
  const std::string& backend() const;
  const std::string& backend_version() const;
  const std::vector<OperatorRecord>& records() const;
  const DbContents& contents() const;
  std::size_t grid_count() const;

  const ExtrapolationPolicy& policy() const { return policy_; }
  PerfDatabase with_policy(ExtrapolationPolicy policy) const;

  // True if a grid exists for the query's (kind, quant, fixed dims).
  bool has_grid(const OperatorQuery& q) const;

  // Latency in microseconds. Exact at stored points; multilinear in
  // log(coordinate) -> log(latency) inside the box; extrapolation policy
  // outside it. Throws MissingKeyError / ExtrapolationError.
  double query_latency(const OperatorQuery& q) const;

  struct Index;

 private:
  std::shared_ptr<const Index> index_;
  ExtrapolationPolicy policy_;
};

DbContents read_db(std::istream& in, const std::string& source_name = "<stream>");
DbContents read_db(const std::filesystem::path& path);

// Parse + validate + index. Throws ParseError or ValidationError with the
// record's line number.
PerfDatabase load_db(const std::filesystem::path& path, ExtrapolationPolicy policy = {});

void write_db(std::ostream& out, const DbContents& contents);
void save_db(const PerfDatabase& db, const std::filesystem::path& path);

// Invariant violations plus coverage gaps for the `required` operators.
ValidationReport validate_db(const DbContents& contents,
                             std::span<const OperatorQuery> required = {});
ValidationReport validate_db(const PerfDatabase& db,
                             std::span<const OperatorQuery> required = {});

inline double query_latency(const PerfDatabase& db, const OperatorQuery& q) {
  return db.query_latency(q);
}

}  // namespace llmconf
