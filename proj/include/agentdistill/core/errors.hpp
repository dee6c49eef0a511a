#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace agentdistill {

// Base of every error thrown by the library. The CLI maps subclasses onto
// exit codes, so keep the hierarchy flat and specific.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// line_number 0 means the error concerns the document as a whole.
class ParseError : public Error {
 public:
  ParseError(std::size_t line_number, std::string reason)
      : Error(line_number == 0 ? reason : "line " + std::to_string(line_number) + ": " + reason),
        line_number_(line_number),
        reason_(std::move(reason)) {}

  std::size_t line_number() const { return line_number_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_number_;
  std::string reason_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class UnknownTask : public Error {
 public:
  explicit UnknownTask(std::string task_id)
      : Error("unknown task id '" + task_id + "'"), task_id_(std::move(task_id)) {}
  const std::string& task_id() const { return task_id_; }

 private:
  std::string task_id_;
};

class EmptyResults : public Error {
 public:
  EmptyResults() : Error("no episode results") {}
};

// A run was stopped by the user (SIGINT) before it finished.
class Interrupted : public Error {
 public:
  Interrupted() : Error("interrupted") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace agentdistill
