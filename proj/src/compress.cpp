#include "evlab/compress.hpp"

#include <unistd.h>
#include <zlib.h>

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <sys/wait.h>

#include "evlab/errors.hpp"

namespace evlab::compress {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

int as_bit(double x, std::size_t index) {
  if (x == 0.0) return 0;
  if (x == 1.0) return 1;
  throw DataError("observation " + std::to_string(index + 1) + " is not a bit");
}

// Removes the temporary file on scope exit.
class TempFile {
 public:
  TempFile() {
    const char* dir = std::getenv("TMPDIR");
    path_ = std::string(dir && *dir ? dir : "/tmp") + "/evlab-XXXXXX";
    fd_ = ::mkstemp(path_.data());
    if (fd_ < 0) throw DataError("external compressor: cannot create temporary file");
  }
  ~TempFile() {
    if (fd_ >= 0) ::close(fd_);
    ::unlink(path_.c_str());
  }
  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  void write_all(std::span<const std::uint8_t> bytes) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::write(fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw DataError("external compressor: cannot write temporary file");
      }
      done += static_cast<std::size_t>(n);
    }
    ::close(fd_);
    fd_ = -1;
  }
  const std::string& path() const { return path_; }

 private:
  std::string path_;
  int fd_ = -1;
};

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::size_t run_external(const std::string& command, ExternalMode mode,
                         std::span<const std::uint8_t> input) {
  TempFile file;
  file.write_all(input);
  const std::string line = "(" + command + ") < " + shell_quote(file.path());
  FILE* pipe = ::popen(line.c_str(), "r");
  if (!pipe) throw DataError("external compressor: cannot start '" + command + "'");
  std::string output;
  char buffer[4096];
  std::size_t n = 0;
  while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) output.append(buffer, n);
  const int status = ::pclose(pipe);
  if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw DataError("external compressor '" + command + "' failed (status " +
                    std::to_string(status) + ")");
  }
  if (mode == ExternalMode::bytes) return output.size();
  std::size_t pos = 0;
  while (pos < output.size() && std::isspace(static_cast<unsigned char>(output[pos]))) ++pos;
  std::size_t end = pos;
  while (end < output.size() && std::isdigit(static_cast<unsigned char>(output[end]))) ++end;
  std::size_t rest = end;
  while (rest < output.size() && std::isspace(static_cast<unsigned char>(output[rest]))) ++rest;
  if (end == pos || rest != output.size()) {
    throw DataError("external compressor '" + command + "' did not print a byte count");
  }
  return std::stoull(output.substr(pos, end - pos));
}

}  // namespace

double KtState::log2_predict(int bit) const {
  const double count = static_cast<double>(bit ? ones_ : zeros_);
  return std::log2((count + 0.5) / (static_cast<double>(zeros_ + ones_) + 1.0));
}

void KtState::update(int bit) {
  if (bit) {
    ++ones_;
  } else {
    ++zeros_;
  }
}

double kt_log2prob(std::span<const double> bits) {
  KtState state;
  double total = 0.0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const int bit = as_bit(bits[i], i);
    total += state.log2_predict(bit);
    state.update(bit);
  }
  return total;
}

std::string describe(const Coder& coder) {
  if (std::holds_alternative<KtCoder>(coder)) return "kt";
  return "adapter:" + std::get<CompressorAdapter>(coder).name;
}

std::vector<std::uint8_t> frame_bits(std::span<const double> bits) {
  const std::size_t bytes = (bits.size() + 7) / 8;
  std::vector<std::uint8_t> out(1 + bytes, 0);
  out[0] = static_cast<std::uint8_t>(bytes * 8 - bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (as_bit(bits[i], i)) out[1 + i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
  }
  return out;
}

EProcessTrace code_length_eprocess(std::span<const double> code_lengths) {
  std::vector<double> log_capital(code_lengths.size());
  for (std::size_t t = 0; t < code_lengths.size(); ++t) {
    if (!(code_lengths[t] >= 0.0) || std::isinf(code_lengths[t])) {
      throw DataError("code length at t=" + std::to_string(t + 1) + " is not a finite nonnegative number");
    }
    log_capital[t] = kLn2 * (static_cast<double>(t + 1) - code_lengths[t]);
  }
  return EProcessTrace::from_log_capital(log_capital);
}

EProcessTrace compression_eprocess(std::span<const double> bits, const Coder& coder) {
  std::vector<double> lengths(bits.size());
  if (std::holds_alternative<KtCoder>(coder)) {
    KtState state;
    double total = 0.0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      const int bit = as_bit(bits[i], i);
      total -= state.log2_predict(bit);
      state.update(bit);
      lengths[i] = total;
    }
    return code_length_eprocess(lengths);
  }
  const auto& adapter = std::get<CompressorAdapter>(coder);
  if (!adapter.compress) throw std::invalid_argument("compression_eprocess: adapter has no function");
  for (std::size_t t = 0; t < bits.size(); ++t) {
    const auto framed = frame_bits(bits.first(t + 1));
    lengths[t] = 8.0 * static_cast<double>(adapter.compress(framed));
  }
  return code_length_eprocess(lengths);
}

double kraft_check(std::size_t n) {
  if (n > 12) throw std::invalid_argument("kraft_check: n must be at most 12");
  std::vector<double> bits(n);
  double total = 0.0;
  for (std::uint32_t code = 0; code < (1u << n); ++code) {
    for (std::size_t i = 0; i < n; ++i) bits[i] = (code >> (n - 1 - i)) & 1u ? 1.0 : 0.0;
    total += std::exp2(kt_log2prob(bits));
  }
  return total;
}

CompressorAdapter zlib_adapter(int level) {
  if (level < 0 || level > 9) throw std::invalid_argument("zlib_adapter: level must be 0..9");
  return CompressorAdapter{"zlib:" + std::to_string(level), [level](std::span<const std::uint8_t> in) {
                             uLongf size = compressBound(in.size());
                             std::vector<Bytef> out(size);
                             const int rc = compress2(out.data(), &size, in.data(), in.size(), level);
                             if (rc != Z_OK) {
                               throw DataError("zlib compress2 failed with code " + std::to_string(rc));
                             }
                             return static_cast<std::size_t>(size);
                           }};
}

CompressorAdapter external_adapter(std::string command, ExternalMode mode) {
  if (command.empty()) throw std::invalid_argument("external_adapter: empty command");
  std::string name = "external:" + command;
  return CompressorAdapter{std::move(name), [command = std::move(command), mode](
                                                std::span<const std::uint8_t> in) {
                             return run_external(command, mode, in);
                           }};
}

}  // namespace evlab::compress
