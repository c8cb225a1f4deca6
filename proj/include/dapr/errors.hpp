/*
 * Copyright 2026 The dapr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAPR_ERRORS_HPP
#define DAPR_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dapr {

/// Base class of every error raised by the toolkit. `kind()` is a stable
/// machine-readable name used in CLI error documents.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string &message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string &kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

/// An error attributable to a specific graph node or plan entry.
class NodeError : public Error {
public:
  NodeError(std::string kind, std::string node_id, const std::string &message)
      : Error(std::move(kind), node_id.empty() ? message : node_id + ": " + message),
        node_id_(std::move(node_id)) {}

  const std::string &node_id() const noexcept { return node_id_; }

private:
  std::string node_id_;
};

class SchemaError : public NodeError {
public:
  explicit SchemaError(const std::string &message, std::string node_id = {})
      : NodeError("SchemaError", std::move(node_id), message) {}
};

class ValidationError : public NodeError {
public:
  ValidationError(std::string node_id, const std::string &message)
      : NodeError("ValidationError", std::move(node_id), message) {}
};

class ShapeError : public NodeError {
public:
  ShapeError(std::string node_id, const std::string &message)
      : NodeError("ShapeError", std::move(node_id), message) {}
};

class DependencyError : public NodeError {
public:
  DependencyError(std::string node_id, const std::string &message)
      : NodeError("DependencyError", std::move(node_id), message) {}
};

class MissingWeight : public NodeError {
public:
  MissingWeight(std::string node_id, const std::string &message)
      : NodeError("MissingWeight", std::move(node_id), message) {}
};

class ShapeMismatch : public NodeError {
public:
  ShapeMismatch(std::string node_id, const std::string &message)
      : NodeError("ShapeMismatch", std::move(node_id), message) {}
};

/// Raised when no plan with at least one surviving filter per layer reaches
/// the requested level.
class InfeasibleTarget : public Error {
public:
  InfeasibleTarget(double target_level, double max_level)
      : Error("InfeasibleTarget",
              "target level " + std::to_string(target_level) +
                  "% is unreachable; maximum achievable level is " +
                  std::to_string(max_level) + "%"),
        target_level_(target_level), max_level_(max_level) {}

  double target_level() const noexcept { return target_level_; }
  double max_level() const noexcept { return max_level_; }

private:
  double target_level_;
  double max_level_;
};

class NonFinite : public Error {
public:
  explicit NonFinite(const std::string &message) : Error("NonFinite", message) {}
};

class EmptySplit : public Error {
public:
  explicit EmptySplit(const std::string &message) : Error("EmptySplit", message) {}
};

class PlanMismatch : public NodeError {
public:
  PlanMismatch(std::string node_id, const std::string &message)
      : NodeError("PlanMismatch", std::move(node_id), message) {}
};

class FormatError : public Error {
public:
  FormatError(const std::string &message, std::uint64_t byte_offset)
      : Error("FormatError", message + " (byte offset " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

private:
  std::uint64_t byte_offset_;
};

class UnknownClass : public Error {
public:
  explicit UnknownClass(const std::string &message) : Error("UnknownClass", message) {}
};

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string &message) : Error("ConfigError", message) {}
};

} // namespace dapr

#endif
