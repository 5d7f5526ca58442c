#pragma once

#include <cstddef>
#include <optional>
#include <ranges>
#include <vector>

#include "servesim/types.h"

namespace servesim {

constexpr std::size_t blocks_needed(Tokens context_len, Tokens block_size) {
  return static_cast<std::size_t>((context_len + block_size - 1) / block_size);
}

// Fixed inventory of KV-cache blocks. Blocks are accounting entities: any
// free block serves any request, so allocation succeeds iff enough blocks are
// free. Every failing operation leaves the pool and the table untouched.
//
// Single writer; copy the pool to hand a snapshot to another thread.
class BlockPool {
 public:
  BlockPool(std::size_t total_blocks, Tokens block_size);

  // Throws OutOfBlocks if fewer than blocks_needed(context_len) are free.
  BlockTable allocate_sequence(RequestId request_id, Tokens context_len);

  // Reserves one more token slot, taking a new block when the last one is
  // full. Throws OutOfBlocks if a block is needed and none is free.
  void append_token(BlockTable& table);

  // Returns every block to the free list and clears the table. Throws
  // ForeignBlock if any block is not owned by table.request_id.
  void free_sequence(BlockTable& table);

  bool can_allocate(Tokens context_len) const {
    return free_list_.size() >= blocks_needed(context_len, block_size_);
  }
  // Whether appending one token to table needs a fresh block.
  bool needs_block(const BlockTable& table) const {
    return table.num_tokens == table.capacity(block_size_);
  }

  std::size_t total_blocks() const { return owner_.size(); }
  std::size_t free_blocks() const { return free_list_.size(); }
  std::size_t allocated_blocks() const { return owner_.size() - free_list_.size(); }
  Tokens block_size() const { return block_size_; }
  std::optional<RequestId> owner(BlockId block) const { return owner_.at(block); }
  const std::vector<BlockId>& free_list() const { return free_list_; }

  bool operator==(const BlockPool&) const = default;

 private:
  BlockId take_block(RequestId owner);

  Tokens block_size_;
  // LIFO stack of free block IDs.
  std::vector<BlockId> free_list_;
  std::vector<std::optional<RequestId>> owner_;
};

struct PoolStats {
  double utilization = 0.0;
  Tokens internal_frag_tokens = 0;
  // Always zero: any free block serves any need.
  Tokens external_frag_tokens = 0;
  std::size_t free_blocks = 0;
};

// tables: any range of BlockTable for the live sequences.
template <std::ranges::input_range Tables>
PoolStats pool_stats(const BlockPool& pool, Tables&& tables) {
  PoolStats stats;
  stats.free_blocks = pool.free_blocks();
  stats.utilization = static_cast<double>(pool.allocated_blocks()) /
                      static_cast<double>(pool.total_blocks());
  for (const BlockTable& t : tables) {
    stats.internal_frag_tokens += t.capacity(pool.block_size()) - t.num_tokens;
  }
  return stats;
}

}  // namespace servesim
