#pragma once
// Text specs for data models and e-process constructors.
//
// Models:        bernoulli:theta  gaussian:mean,sd  beta:a,b
// Constructors:  constant
//                lr:bernoulli:p0,p1
//                lr:gaussian:mu0,mu1,sigma
//                gaussian_evar:lambda,sigma
//                gaussian_mixture:sigma
//                bounded_mean:mu:agrapa | bounded_mean:mu:fixed:lambda
//                universal:bernoulli:lo,hi:kt | universal:bernoulli:lo,hi:fixed:theta
//                universal:gaussian:sigma,lo,hi:running | universal:gaussian:sigma,lo,hi:fixed:mu
//                mixture:bernoulli:lo,hi:theta1,theta2,...
//                ttest:delta@weight,...
//                kt | zlib[:level] | external

#include <string>
#include <vector>

#include "evlab/compress.hpp"
#include "evlab/simlab.hpp"

namespace evlab::cli {

/// Data a model produces or a constructor accepts, ordered by inclusion.
enum class Domain { binary, unit, real };

std::string to_string(Domain d);

struct ModelSpec {
  simlab::Sampler sampler;
  Domain support;
};

struct ConstructorSpec {
  simlab::Constructor constructor;
  Domain accepts;
};

struct ExternalCompressor {
  std::string command;
  compress::ExternalMode mode = compress::ExternalMode::count;
};

/// ConfigError naming the field "model" on a malformed spec.
ModelSpec parse_model(const std::string& spec);

/// ConfigError naming the field "constructor" on a malformed spec. `external`
/// needs a nonempty external.command.
ConstructorSpec parse_constructor(const std::string& spec, const ExternalCompressor& external = {});

/// ConfigError naming both fields when the model can emit data the
/// constructor does not accept.
void check_compatible(const std::string& model_text, const ModelSpec& model,
                      const std::string& constructor_text, const ConstructorSpec& constructor);

/// Comma-separated finite numbers. ConfigError naming `field` otherwise.
std::vector<double> parse_numbers(const std::string& text, const std::string& field);

}  // namespace evlab::cli
