#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qsuggest {

// Base of every library error. error_class() is the stable, machine-parsable
// name the CLI prints and the HTTP layer returns.
class Error : public std::runtime_error {
 public:
  Error(std::string error_class, const std::string& message)
      : std::runtime_error(message), class_(std::move(error_class)) {}

  const std::string& error_class() const noexcept { return class_; }

 private:
  std::string class_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_error", message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message)
      : Error("format_error", message) {}
};

// A caller broke a documented precondition.
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error("contract_violation", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("config_error", message) {}
};

class OversizeError : public Error {
 public:
  explicit OversizeError(const std::string& message)
      : Error("oversize_error", message) {}
};

class TransportError : public Error {
 public:
  TransportError(const std::string& message, std::vector<std::string> attempts)
      : Error("transport_error", message), attempts_(std::move(attempts)) {}

  // One human-readable entry per attempt, in order.
  const std::vector<std::string>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<std::string> attempts_;
};

class RequestError : public Error {
 public:
  RequestError(int status, const std::string& message)
      : Error("request_error", message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

class MalformedResponseError : public Error {
 public:
  explicit MalformedResponseError(const std::string& message)
      : Error("malformed_response", message) {}
};

// The stream broke after some chunks were already delivered.
class PartialStreamError : public Error {
 public:
  PartialStreamError(const std::string& message, std::vector<std::string> chunks)
      : Error("partial_stream", message), chunks_(std::move(chunks)) {}

  const std::vector<std::string>& chunks() const noexcept { return chunks_; }

 private:
  std::vector<std::string> chunks_;
};

class ExportError : public Error {
 public:
  explicit ExportError(const std::string& message)
      : Error("export_error", message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message)
      : Error("not_found", message) {}
};

}  // namespace qsuggest
