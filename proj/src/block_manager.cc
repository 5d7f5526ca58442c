#include "servesim/block_manager.h"

#include <string>

#include "servesim/errors.h"

namespace servesim {

BlockPool::BlockPool(std::size_t total_blocks, Tokens block_size)
    : block_size_(block_size), owner_(total_blocks) {
  if (block_size < 1) throw ConfigError("block_size must be >= 1");
  if (total_blocks < 1) throw ConfigError("total_blocks must be >= 1");
  // Reverse order so the lowest IDs are handed out first.
  free_list_.reserve(total_blocks);
  for (std::size_t i = total_blocks; i-- > 0;) free_list_.push_back(static_cast<BlockId>(i));
}

BlockId BlockPool::take_block(RequestId owner) {
  const BlockId b = free_list_.back();
  free_list_.pop_back();
  owner_[b] = owner;
  return b;
}

BlockTable BlockPool::allocate_sequence(RequestId request_id, Tokens context_len) {
  const std::size_t need = blocks_needed(context_len, block_size_);
  if (free_list_.size() < need) {
    throw OutOfBlocks("request " + std::to_string(request_id) + " needs " +
                      std::to_string(need) + " blocks, " +
                      std::to_string(free_list_.size()) + " free");
  }
  BlockTable table{request_id, {}, context_len};
  table.blocks.reserve(need);
  for (std::size_t i = 0; i < need; ++i) table.blocks.push_back(take_block(request_id));
  return table;
}

void BlockPool::append_token(BlockTable& table) {
  if (needs_block(table)) {
    if (free_list_.empty()) {
      throw OutOfBlocks("no free block to grow request " + std::to_string(table.request_id));
    }
    table.blocks.push_back(take_block(table.request_id));
  }
  ++table.num_tokens;
}

void BlockPool::free_sequence(BlockTable& table) {
  for (BlockId b : table.blocks) {
    if (b >= owner_.size() || owner_[b] != table.request_id) {
      throw ForeignBlock("block " + std::to_string(b) + " is not owned by request " +
                         std::to_string(table.request_id));
    }
  }
  // Return in reverse so a free immediately followed by an allocation of the
  // same size hands back the same blocks in the same order.
  for (auto it = table.blocks.rbegin(); it != table.blocks.rend(); ++it) {
    owner_[*it].reset();
    free_list_.push_back(*it);
  }
  table.blocks.clear();
  table.num_tokens = 0;
}

}  // namespace servesim
