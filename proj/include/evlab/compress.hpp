#pragma once
// Compression-based e-processes against the fair-coin null.
//
// A lossless prefix-free code with lengths CL(x) defines the sub-probability
// q(x) = 2^-CL(x) (Kraft), so 2^(t - CL(x_1..x_t)) is the likelihood ratio
// q / p against p(x^t) = 2^-t.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evlab/evcore.hpp"

namespace evlab::compress {

/// Krichevsky-Trofimov sequential coder state.
class KtState {
 public:
  std::uint64_t zeros() const { return zeros_; }
  std::uint64_t ones() const { return ones_; }

  /// log2 P(bit | counts) = log2((count(bit) + 1/2) / (zeros + ones + 1)).
  double log2_predict(int bit) const;
  void update(int bit);

 private:
  std::uint64_t zeros_ = 0;
  std::uint64_t ones_ = 0;
};

/// log2 of the KT probability of the sequence. Rejects non-binary input
/// (values other than 0.0 and 1.0) with DataError.
double kt_log2prob(std::span<const double> bits);

/// Byte-oriented compressor: returns the compressed length in bytes. Code
/// length is accounted as 8 bits per byte.
struct CompressorAdapter {
  std::string name;
  std::function<std::size_t(std::span<const std::uint8_t>)> compress;
};

struct KtCoder {};
using Coder = std::variant<KtCoder, CompressorAdapter>;

std::string describe(const Coder& coder);

/// Adapter framing: one byte holding the number of zero padding bits (0..7),
/// then the bits packed most-significant first, last byte zero-padded.
std::vector<std::uint8_t> frame_bits(std::span<const double> bits);

/// log2 K_t = t - CL_t for code lengths CL_1..CL_T given in bits.
EProcessTrace code_length_eprocess(std::span<const double> code_lengths);

/// Trace K_1..K_T. For an adapter every prefix is framed and compressed on its
/// own; adapter failures propagate as DataError.
EProcessTrace compression_eprocess(std::span<const double> bits, const Coder& coder);

/// Sum over all 2^n binary strings of the KT probability (n <= 12).
double kraft_check(std::size_t n);

/// zlib deflate (compress2) at the given level.
CompressorAdapter zlib_adapter(int level = 9);

enum class ExternalMode { count, bytes };

/// Runs `command` through the shell with the framed bytes on stdin. In count
/// mode stdout must hold the compressed byte count; in bytes mode the
/// compressed data itself. Non-zero exit or unparsable output is a DataError.
/// Each call spawns a process, so adapters built here are reentrant.
CompressorAdapter external_adapter(std::string command, ExternalMode mode);

}  // namespace evlab::compress
