#include "crtmux/transport.hpp"

#include "crtmux/error.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

namespace crtmux {

void ChannelEndpoint::send_cell(std::span<const std::uint8_t> cell) {
   if (cell.size() != cell_width_)
      throw Error(Errc::BadWidth, "cell of " + std::to_string(cell.size()) + " bytes on channel " +
                                      std::to_string(channel_) + " (width " +
                                      std::to_string(cell_width_) + ")");
   write_cell(cell);
}

void TransportBundle::close_all() {
   for (auto& ep : endpoints_)
      ep->close();
}

namespace {

using Clock = std::chrono::steady_clock;

std::optional<Clock::time_point> deadline_for(std::optional<Millis> timeout) {
   if (!timeout)
      return std::nullopt;
   return Clock::now() + *timeout;
}

// ---------------------------------------------------------------------------
// In-memory backend

class CellQueue {
public:
   explicit CellQueue(std::size_t capacity) : capacity_(capacity) {}

   void push(Bytes cell) {
      std::unique_lock lock(mu_);
      not_full_.wait(lock, [&] { return q_.size() < capacity_ || abandoned_ || closed_; });
      if (abandoned_ || closed_)
         throw Error(Errc::Closed, "in-memory channel closed");
      q_.push_back(std::move(cell));
      not_empty_.notify_one();
   }

   std::optional<Bytes> pop(std::optional<Clock::time_point> deadline) {
      std::unique_lock lock(mu_);
      auto ready = [&] { return !q_.empty() || closed_; };
      if (deadline) {
         if (!not_empty_.wait_until(lock, *deadline, ready))
            throw Error(Errc::Timeout, "no cell before deadline");
      } else {
         not_empty_.wait(lock, ready);
      }
      if (q_.empty())
         return std::nullopt;
      Bytes cell = std::move(q_.front());
      q_.pop_front();
      not_full_.notify_one();
      return cell;
   }

   void close() {
      std::lock_guard lock(mu_);
      closed_ = true;
      not_empty_.notify_all();
      not_full_.notify_all();
   }

   void abandon() {
      std::lock_guard lock(mu_);
      abandoned_ = true;
      not_full_.notify_all();
   }

private:
   std::mutex mu_;
   std::condition_variable not_empty_;
   std::condition_variable not_full_;
   std::deque<Bytes> q_;
   std::size_t capacity_;
   bool closed_ = false;
   bool abandoned_ = false;
};

class MemoryEndpoint final : public ChannelEndpoint {
public:
   MemoryEndpoint(ChannelId c, std::size_t width, std::shared_ptr<CellQueue> tx,
                  std::shared_ptr<CellQueue> rx)
      : ChannelEndpoint(c, width), tx_(std::move(tx)), rx_(std::move(rx)) {}

   ~MemoryEndpoint() override {
      tx_->close();
      rx_->abandon();
   }

   std::optional<Bytes> recv_cell(std::optional<Millis> timeout) override {
      return rx_->pop(deadline_for(timeout));
   }

   void close() override { tx_->close(); }

protected:
   void write_cell(std::span<const std::uint8_t> cell) override {
      tx_->push(Bytes(cell.begin(), cell.end()));
   }

private:
   std::shared_ptr<CellQueue> tx_;
   std::shared_ptr<CellQueue> rx_;
};

// ---------------------------------------------------------------------------
// TCP backend

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
   sockaddr_in addr{};
   addr.sin_family = AF_INET;
   addr.sin_port = htons(port);
   if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) == 1)
      return addr;

   addrinfo hints{};
   hints.ai_family = AF_INET;
   hints.ai_socktype = SOCK_STREAM;
   addrinfo* res = nullptr;
   if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr)
      throw Error(Errc::ConnectFailed, "cannot resolve host " + host);
   addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
   freeaddrinfo(res);
   return addr;
}

class TcpEndpoint final : public ChannelEndpoint {
public:
   TcpEndpoint(ChannelId c, std::size_t width, int fd) : ChannelEndpoint(c, width), fd_(fd) {}
   ~TcpEndpoint() override { ::close(fd_); }

   std::optional<Bytes> recv_cell(std::optional<Millis> timeout) override {
      const auto deadline = deadline_for(timeout);
      Bytes cell(cell_width());
      std::size_t got = 0;
      while (got < cell.size()) {
         if (deadline) {
            const auto left = std::chrono::duration_cast<Millis>(*deadline - Clock::now());
            pollfd p{fd_, POLLIN, 0};
            const int rc = ::poll(&p, 1, static_cast<int>(std::max<Millis::rep>(0, left.count())));
            if (rc == 0)
               throw Error(Errc::Timeout, "no cell before deadline on channel " +
                                              std::to_string(channel()));
            if (rc < 0 && errno != EINTR)
               throw Error(Errc::Closed, "poll: " + errno_text());
            if (rc < 0)
               continue;
         }
         const ssize_t n = ::recv(fd_, cell.data() + got, cell.size() - got, 0);
         if (n == 0) {
            if (got == 0)
               return std::nullopt;
            throw Error(Errc::Closed, "stream ended inside a cell on channel " +
                                          std::to_string(channel()));
         }
         if (n < 0) {
            if (errno == EINTR)
               continue;
            throw Error(Errc::Closed, "recv: " + errno_text());
         }
         got += static_cast<std::size_t>(n);
      }
      return cell;
   }

   void close() override { ::shutdown(fd_, SHUT_WR); }

protected:
   void write_cell(std::span<const std::uint8_t> cell) override {
      std::size_t sent = 0;
      while (sent < cell.size()) {
         const ssize_t n = ::send(fd_, cell.data() + sent, cell.size() - sent, MSG_NOSIGNAL);
         if (n < 0) {
            if (errno == EINTR)
               continue;
            throw Error(Errc::Closed, "send on channel " + std::to_string(channel()) + ": " +
                                          errno_text());
         }
         sent += static_cast<std::size_t>(n);
      }
   }

private:
   int fd_;
};

}  // namespace

std::pair<TransportBundle, TransportBundle> open_memory_bundle(
   const std::vector<std::size_t>& cell_widths, std::size_t capacity) {
   std::vector<std::unique_ptr<ChannelEndpoint>> a, b;
   for (ChannelId c = 0; c < cell_widths.size(); ++c) {
      auto ab = std::make_shared<CellQueue>(capacity);
      auto ba = std::make_shared<CellQueue>(capacity);
      a.push_back(std::make_unique<MemoryEndpoint>(c, cell_widths[c], ab, ba));
      b.push_back(std::make_unique<MemoryEndpoint>(c, cell_widths[c], ba, ab));
   }
   return {TransportBundle(std::move(a)), TransportBundle(std::move(b))};
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port_base, std::size_t channels)
   : port_base_(port_base) {
   if (channels == 0 || std::size_t{port_base} + channels - 1 > 65535)
      throw Error(Errc::BindFailed, "port range out of bounds");
   for (std::size_t c = 0; c < channels; ++c) {
      const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
      if (fd < 0)
         throw Error(Errc::BindFailed, "socket: " + errno_text());
      fds_.push_back(fd);
      const int one = 1;
      ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
      sockaddr_in addr{};
      try {
         addr = resolve(host, static_cast<std::uint16_t>(port_base + c));
      } catch (const Error& e) {
         throw Error(Errc::BindFailed, e.what());
      }
      if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
          ::listen(fd, 1) != 0) {
         const std::string why = errno_text();
         for (int f : fds_)
            ::close(f);
         fds_.clear();
         throw Error(Errc::BindFailed,
                     "port " + std::to_string(port_base + c) + ": " + why);
      }
   }
}

TcpListener::~TcpListener() {
   for (int fd : fds_)
      ::close(fd);
}

TransportBundle TcpListener::accept(const std::vector<std::size_t>& cell_widths, Millis timeout) {
   if (cell_widths.size() != fds_.size())
      throw Error(Errc::SizeMismatch, "one cell width per listening port required");
   const auto deadline = Clock::now() + timeout;
   std::vector<std::unique_ptr<ChannelEndpoint>> eps;
   for (ChannelId c = 0; c < fds_.size(); ++c) {
      for (;;) {
         const auto left = std::chrono::duration_cast<Millis>(deadline - Clock::now());
         pollfd p{fds_[c], POLLIN, 0};
         const int rc = ::poll(&p, 1, static_cast<int>(std::max<Millis::rep>(0, left.count())));
         if (rc == 0)
            throw Error(Errc::Timeout, "no connection on port " + std::to_string(port_base_ + c));
         if (rc < 0 && errno == EINTR)
            continue;
         if (rc < 0)
            throw Error(Errc::ConnectFailed, "poll: " + errno_text());
         break;
      }
      const int fd = ::accept(fds_[c], nullptr, nullptr);
      if (fd < 0)
         throw Error(Errc::ConnectFailed, "accept: " + errno_text());
      eps.push_back(std::make_unique<TcpEndpoint>(c, cell_widths[c], fd));
   }
   return TransportBundle(std::move(eps));
}

TransportBundle connect_tcp(const std::string& host, std::uint16_t port_base,
                            const std::vector<std::size_t>& cell_widths, Millis timeout) {
   if (cell_widths.empty() || std::size_t{port_base} + cell_widths.size() - 1 > 65535)
      throw Error(Errc::ConnectFailed, "port range out of bounds");
   const auto deadline = Clock::now() + timeout;
   std::vector<std::unique_ptr<ChannelEndpoint>> eps;
   for (ChannelId c = 0; c < cell_widths.size(); ++c) {
      const sockaddr_in addr = resolve(host, static_cast<std::uint16_t>(port_base + c));
      for (;;) {
         const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
         if (fd < 0)
            throw Error(Errc::ConnectFailed, "socket: " + errno_text());
         if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) == 0) {
            eps.push_back(std::make_unique<TcpEndpoint>(c, cell_widths[c], fd));
            break;
         }
         const std::string why = errno_text();
         ::close(fd);
         if (Clock::now() >= deadline)
            throw Error(Errc::ConnectFailed,
                        host + ":" + std::to_string(port_base + c) + ": " + why);
         std::this_thread::sleep_for(Millis(20));
      }
   }
   return TransportBundle(std::move(eps));
}

void broadcast_superblock(TransportBundle& bundle, std::span<const ChannelPacket> packets) {
   if (packets.size() != bundle.size())
      throw Error(Errc::SizeMismatch, "need exactly one packet per channel");
   for (const auto& p : packets)
      bundle[p.channel].send_cell(p.payload);
}

std::optional<std::vector<ChannelPacket>> gather_superblock(
   TransportBundle& bundle, const std::vector<ChannelId>& selected,
   std::optional<Millis> timeout) {
   const auto deadline = deadline_for(timeout);
   std::vector<std::optional<Bytes>> cells(bundle.size());
   std::size_t ended = 0;
   for (ChannelId c = 0; c < bundle.size(); ++c) {
      std::optional<Millis> left;
      if (deadline)
         left = std::max(Millis(0), std::chrono::duration_cast<Millis>(*deadline - Clock::now()));
      cells[c] = bundle[c].recv_cell(left);
      if (!cells[c])
         ++ended;
   }
   if (ended == bundle.size())
      return std::nullopt;
   if (ended != 0)
      throw Error(Errc::Closed, std::to_string(ended) + " of " + std::to_string(bundle.size()) +
                                    " channels ended mid-transfer");

   std::vector<ChannelId> order = selected;
   std::sort(order.begin(), order.end());
   std::vector<ChannelPacket> out;
   out.reserve(order.size());
   for (ChannelId c : order) {
      if (c >= bundle.size())
         throw Error(Errc::SizeMismatch, "selected channel outside bundle");
      out.push_back(ChannelPacket{c, std::move(*cells[c]), PacketKind::Real});
   }
   return out;
}

}  // namespace crtmux
