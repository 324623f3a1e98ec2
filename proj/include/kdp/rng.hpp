#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace kdp {

/// Philox4x32-10 block function (Salmon et al., SC'11). Pure: the same
/// (counter, key) always yields the same four words.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Source of primitive variates. Kernels and the process draw through this
/// interface so tests can script exact values.
class VariateSource {
 public:
  virtual ~VariateSource() = default;
  /// Uniform on the open interval (0, 1).
  virtual double uniform() = 0;
  virtual double normal() = 0;
  /// Uniform on {0, ..., n-1}.
  virtual std::uint64_t index(std::uint64_t n) = 0;
};

/// Disjoint substreams per replication.
enum class StreamPurpose : std::uint32_t {
  ancestor = 0,
  kernel = 1,
  auxiliary = 2,
};

/// Counter-based stream: the key is the master seed, the upper counter words
/// hold (replication, purpose), and the lower words count blocks. Streams with
/// different (replication, purpose) can never overlap.
class Stream final : public VariateSource {
 public:
  Stream(std::uint64_t master_seed, std::uint32_t replication,
         StreamPurpose purpose);

  std::uint64_t next_u64();
  double uniform() override;
  double normal() override;
  std::uint64_t index(std::uint64_t n) override;

  std::uint64_t blocks_consumed() const { return block_; }

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint32_t replication_;
  std::uint32_t purpose_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;  // 64-bit words left in buffer_
  std::optional<double> spare_normal_;
};

/// Replays fixed sequences; throws once a sequence is exhausted.
class ScriptedVariates final : public VariateSource {
 public:
  ScriptedVariates(std::vector<double> normals, std::vector<double> uniforms = {},
                   std::vector<std::uint64_t> indices = {});

  double uniform() override;
  double normal() override;
  std::uint64_t index(std::uint64_t n) override;

 private:
  std::vector<double> normals_;
  std::vector<double> uniforms_;
  std::vector<std::uint64_t> indices_;
  std::size_t next_normal_ = 0;
  std::size_t next_uniform_ = 0;
  std::size_t next_index_ = 0;
};

}  // namespace kdp
