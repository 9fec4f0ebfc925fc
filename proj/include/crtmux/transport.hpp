#pragma once

#include "crtmux/channel_select.hpp"
#include "crtmux/natural.hpp"
#include "crtmux/scheme.hpp"

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace crtmux {

using Millis = std::chrono::milliseconds;

/// One ordered byte channel carrying fixed-width cells. No framing bytes
/// are ever added: the wire carries raw cells only.
class ChannelEndpoint {
public:
   ChannelEndpoint(ChannelId channel, std::size_t cell_width)
      : channel_(channel), cell_width_(cell_width) {}
   virtual ~ChannelEndpoint() = default;

   ChannelEndpoint(const ChannelEndpoint&) = delete;
   ChannelEndpoint& operator=(const ChannelEndpoint&) = delete;

   ChannelId channel() const { return channel_; }
   std::size_t cell_width() const { return cell_width_; }

   /// Throws BadWidth if the cell is not exactly cell_width() bytes,
   /// Closed if the peer has gone away.
   void send_cell(std::span<const std::uint8_t> cell);

   /// Blocks for one whole cell. Returns nullopt when the peer closed
   /// cleanly on a cell boundary; throws Closed on a partial cell and
   /// Timeout when `timeout` elapses first.
   virtual std::optional<Bytes> recv_cell(std::optional<Millis> timeout = std::nullopt) = 0;

   /// Ends the outbound direction; the peer sees end-of-stream after
   /// draining queued cells.
   virtual void close() = 0;

protected:
   virtual void write_cell(std::span<const std::uint8_t> cell) = 0;

private:
   ChannelId channel_;
   std::size_t cell_width_;
};

/// Exactly A endpoints indexed by channel id.
class TransportBundle {
public:
   TransportBundle() = default;
   explicit TransportBundle(std::vector<std::unique_ptr<ChannelEndpoint>> endpoints)
      : endpoints_(std::move(endpoints)) {}

   std::size_t size() const { return endpoints_.size(); }
   ChannelEndpoint& operator[](ChannelId c) { return *endpoints_.at(c); }

   void close_all();

private:
   std::vector<std::unique_ptr<ChannelEndpoint>> endpoints_;
};

inline constexpr std::size_t kMemoryQueueCapacity = 1024;

/// Two connected bundles backed by bounded in-process queues (one queue per
/// direction per channel).
std::pair<TransportBundle, TransportBundle> open_memory_bundle(
   const std::vector<std::size_t>& cell_widths, std::size_t capacity = kMemoryQueueCapacity);

/// Listening side of a TCP bundle: channel c is served on port_base + c.
class TcpListener {
public:
   /// Binds all A ports up front. Throws BindFailed.
   TcpListener(const std::string& host, std::uint16_t port_base, std::size_t channels);
   ~TcpListener();

   TcpListener(const TcpListener&) = delete;
   TcpListener& operator=(const TcpListener&) = delete;

   /// Accepts one connection per port. Throws Timeout.
   TransportBundle accept(const std::vector<std::size_t>& cell_widths, Millis timeout);

   std::uint16_t port_base() const { return port_base_; }

private:
   std::vector<int> fds_;
   std::uint16_t port_base_;
};

/// Connects channel c to host:port_base+c, in channel id order, retrying
/// refused connections until `timeout`. Throws ConnectFailed.
TransportBundle connect_tcp(const std::string& host, std::uint16_t port_base,
                            const std::vector<std::size_t>& cell_widths, Millis timeout);

/// Writes one packet per channel; packets must cover every channel once.
void broadcast_superblock(TransportBundle& bundle, std::span<const ChannelPacket> packets);

/// Reads exactly one cell from every channel (lockstep) and returns the
/// cells of `selected`, ordered by channel id. Returns nullopt when every
/// channel ended cleanly before this superblock; throws Closed when only
/// some did, Timeout if `timeout` elapses on any channel.
std::optional<std::vector<ChannelPacket>> gather_superblock(
   TransportBundle& bundle, const std::vector<ChannelId>& selected,
   std::optional<Millis> timeout = std::nullopt);

}  // namespace crtmux
