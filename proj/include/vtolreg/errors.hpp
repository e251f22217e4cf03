#pragma once

#include <stdexcept>
#include <string>

namespace vtolreg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// cos(roll)*cos(pitch) too close to zero, or mu_3 too close to g.
class SingularAttitudeError : public Error {
 public:
  using Error::Error;
};

/// Invalid parameters, gains, scenario fields or file schema.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotHurwitzError : public Error {
 public:
  using Error::Error;
};

class ProjectionError : public Error {
 public:
  using Error::Error;
};

class InconsistentDerivativeError : public Error {
 public:
  using Error::Error;
};

class ScenarioMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace vtolreg
