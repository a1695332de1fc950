#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <type_traits>
#include <variant>

#include "sdwca/geo_graph.hpp"

namespace sdwca {

using Round = std::uint64_t;

struct Hello {
  NodeId id;
  Position pos;
  std::uint64_t seq;
  std::optional<double> weight;  // piggybacked once the sender has computed it
  std::optional<NodeId> ch = std::nullopt;  // sender's head (itself when head) once settled
};
struct WeightInfo {
  NodeId id;
  double weight;
};
struct ClusterInfo {
  NodeId id;
  double weight;
};
struct ClusterId {
  NodeId id;
  NodeId ch;
};
struct FindCh {
  NodeId id;
};
struct ChAck {
  NodeId ch;
  double weight;
};
struct ChResign {
  NodeId ch;
};

using Message = std::variant<Hello, WeightInfo, ClusterInfo, ClusterId, FindCh, ChAck, ChResign>;

enum class MessageKind : std::uint8_t { Hello, WeightInfo, ClusterInfo, ClusterId, FindCh, ChAck, ChResign };

inline constexpr std::size_t kMessageKinds = 7;

inline MessageKind kind_of(const Message& m) { return static_cast<MessageKind>(m.index()); }

inline NodeId sender_of(const Message& m) {
  return std::visit(
      [](const auto& msg) -> NodeId {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, ChAck> || std::is_same_v<T, ChResign>) {
          return msg.ch;
        } else {
          return msg.id;
        }
      },
      m);
}

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Hello: return "hello";
    case MessageKind::WeightInfo: return "weight_info";
    case MessageKind::ClusterInfo: return "cluster_info";
    case MessageKind::ClusterId: return "cluster_id";
    case MessageKind::FindCh: return "find_ch";
    case MessageKind::ChAck: return "ch_ack";
    case MessageKind::ChResign: return "ch_resign";
  }
  return "?";
}

inline std::optional<MessageKind> message_kind_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kMessageKinds; ++i) {
    auto k = static_cast<MessageKind>(i);
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

}  // namespace sdwca
