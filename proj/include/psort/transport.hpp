#pragma once

// Ranked point-to-point message passing. Two interchangeable backends: an
// in-process channel mesh and a TCP loopback mesh that puts every message on
// the wire in the framed format from wire.hpp.

#include <arpa/inet.h>
#include <cerrno>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "psort/errors.hpp"
#include "psort/wire.hpp"

namespace psort {

using Rank = std::size_t;

/******************************************************************************/
// traffic accounting

//! Per ordered (src, dst) pair message and key counters, shared by all
//! endpoints of a group.
class TrafficProbe {
public:
    explicit TrafficProbe(std::size_t size)
        : size_(size),
          keys_msgs_(std::make_unique<std::atomic<std::size_t>[]>(size * size)),
          done_msgs_(std::make_unique<std::atomic<std::size_t>[]>(size * size)),
          keys_sent_(std::make_unique<std::atomic<std::size_t>[]>(size * size)) {}

    void record(Rank from, Rank to, const Message& msg) {
        const std::size_t idx = from * size_ + to;
        if (msg.kind == MessageKind::keys) {
            keys_msgs_[idx].fetch_add(1, std::memory_order_relaxed);
            keys_sent_[idx].fetch_add(msg.payload.size(), std::memory_order_relaxed);
        } else {
            done_msgs_[idx].fetch_add(1, std::memory_order_relaxed);
        }
    }

    //! KEYS messages sent from -> to.
    std::size_t data_messages(Rank from, Rank to) const {
        return keys_msgs_[from * size_ + to].load();
    }
    std::size_t done_messages(Rank from, Rank to) const {
        return done_msgs_[from * size_ + to].load();
    }
    std::size_t keys_sent(Rank from, Rank to) const {
        return keys_sent_[from * size_ + to].load();
    }

    std::size_t total_data_messages() const {
        std::size_t total = 0;
        for (std::size_t i = 0; i < size_ * size_; ++i) total += keys_msgs_[i].load();
        return total;
    }

    void reset() {
        for (std::size_t i = 0; i < size_ * size_; ++i) {
            keys_msgs_[i] = 0;
            done_msgs_[i] = 0;
            keys_sent_[i] = 0;
        }
    }

    std::size_t size() const noexcept { return size_; }

private:
    std::size_t size_;
    std::unique_ptr<std::atomic<std::size_t>[]> keys_msgs_;
    std::unique_ptr<std::atomic<std::size_t>[]> done_msgs_;
    std::unique_ptr<std::atomic<std::size_t>[]> keys_sent_;
};

/******************************************************************************/
// endpoint interface

//! One rank's view of the group. send() is safe from one sender per
//! destination at a time, recv() from one receiver per source at a time.
class Endpoint {
public:
    Endpoint(Rank rank, std::size_t group_size, TrafficProbe* probe)
        : rank_(rank), group_size_(group_size), probe_(probe) {}
    virtual ~Endpoint() = default;

    Endpoint(const Endpoint&) = delete;
    Endpoint& operator=(const Endpoint&) = delete;

    Rank rank() const noexcept { return rank_; }
    std::size_t group_size() const noexcept { return group_size_; }

    void send(Rank to, const Message& msg) {
        check_peer(to);
        do_send(to, msg);
        if (probe_) probe_->record(rank_, to, msg);
    }

    //! Blocks until the next message from `from` arrives.
    Message recv(Rank from) {
        check_peer(from);
        return do_recv(from);
    }

    //! Shuts the endpoint down; peers blocked on or later calling recv() from
    //! this rank see PeerClosed once queued messages are drained.
    virtual void close() = 0;

protected:
    virtual void do_send(Rank to, const Message& msg) = 0;
    virtual Message do_recv(Rank from) = 0;

private:
    void check_peer(Rank peer) const {
        if (peer == rank_)
            throw SelfSend("rank " + std::to_string(rank_) + " cannot message itself");
        if (peer >= group_size_)
            throw TransportError("rank " + std::to_string(peer) +
                                 " outside group of size " + std::to_string(group_size_));
    }

    Rank rank_;
    std::size_t group_size_;
    TrafficProbe* probe_;
};

//! A fixed set of endpoints, one per rank, with reliable per-pair FIFO
//! delivery between every ordered pair.
class TransportGroup {
public:
    TransportGroup(std::vector<std::unique_ptr<Endpoint>> endpoints,
                   std::unique_ptr<TrafficProbe> probe, std::shared_ptr<void> state,
                   std::string backend)
        : endpoints_(std::move(endpoints)), probe_(std::move(probe)),
          state_(std::move(state)), backend_(std::move(backend)) {}

    TransportGroup(TransportGroup&&) noexcept = default;
    TransportGroup& operator=(TransportGroup&&) noexcept = default;

    ~TransportGroup() {
        // endpoints may reference shared state; drop them first
        endpoints_.clear();
    }

    std::size_t size() const noexcept { return endpoints_.size(); }
    Endpoint& endpoint(Rank r) { return *endpoints_.at(r); }
    TrafficProbe& probe() { return *probe_; }
    const std::string& backend() const noexcept { return backend_; }

private:
    std::vector<std::unique_ptr<Endpoint>> endpoints_;
    std::unique_ptr<TrafficProbe> probe_;
    std::shared_ptr<void> state_;
    std::string backend_;
};

/******************************************************************************/
// in-process backend

namespace local_detail {

struct Channel {
    std::mutex mutex;
    std::condition_variable ready;
    std::deque<Message> queue;
    bool sender_closed = false;
    bool receiver_closed = false;
};

struct Mesh {
    explicit Mesh(std::size_t size) : size(size), channels(size * size) {}
    Channel& channel(Rank from, Rank to) { return channels[from * size + to]; }

    std::size_t size;
    std::vector<Channel> channels;
};

class LocalEndpoint final : public Endpoint {
public:
    LocalEndpoint(Rank rank, std::shared_ptr<Mesh> mesh, TrafficProbe* probe)
        : Endpoint(rank, mesh->size, probe), mesh_(std::move(mesh)) {}

    void close() override {
        for (Rank peer = 0; peer < mesh_->size; ++peer) {
            if (peer == rank()) continue;
            mark(mesh_->channel(rank(), peer), &Channel::sender_closed);
            mark(mesh_->channel(peer, rank()), &Channel::receiver_closed);
        }
    }

protected:
    void do_send(Rank to, const Message& msg) override {
        Channel& ch = mesh_->channel(rank(), to);
        {
            std::lock_guard lock(ch.mutex);
            if (ch.sender_closed)
                throw PeerClosed("rank " + std::to_string(rank()) + " is closed");
            if (ch.receiver_closed)
                throw PeerClosed("rank " + std::to_string(to) + " is closed");
            ch.queue.push_back(msg);
        }
        ch.ready.notify_one();
    }

    Message do_recv(Rank from) override {
        Channel& ch = mesh_->channel(from, rank());
        std::unique_lock lock(ch.mutex);
        ch.ready.wait(lock, [&] {
            return !ch.queue.empty() || ch.sender_closed || ch.receiver_closed;
        });
        if (ch.queue.empty())
            throw PeerClosed("rank " + std::to_string(from) + " closed before sending");
        Message msg = std::move(ch.queue.front());
        ch.queue.pop_front();
        return msg;
    }

private:
    static void mark(Channel& ch, bool Channel::*flag) {
        {
            std::lock_guard lock(ch.mutex);
            ch.*flag = true;
        }
        ch.ready.notify_all();
    }

    std::shared_ptr<Mesh> mesh_;
};

} // namespace local_detail

inline TransportGroup make_local_group(std::size_t size) {
    if (size < 1) throw ConfigError("transport group needs at least one rank");
    auto mesh = std::make_shared<local_detail::Mesh>(size);
    auto probe = std::make_unique<TrafficProbe>(size);
    std::vector<std::unique_ptr<Endpoint>> eps;
    for (Rank r = 0; r < size; ++r)
        eps.push_back(std::make_unique<local_detail::LocalEndpoint>(r, mesh, probe.get()));
    return TransportGroup(std::move(eps), std::move(probe), mesh, "local");
}

/******************************************************************************/
// TCP loopback backend

namespace tcp_detail {

inline std::string errno_text(const char* what) {
    return std::string(what) + ": " + std::strerror(errno);
}

class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    ~Socket() { reset(); }

    int fd() const noexcept { return fd_; }
    explicit operator bool() const noexcept { return fd_ >= 0; }

    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

private:
    int fd_ = -1;
};

inline sockaddr_in loopback(std::uint16_t port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    return addr;
}

inline Socket listen_on(std::uint16_t port, int backlog) {
    Socket s(::socket(AF_INET, SOCK_STREAM, 0));
    if (!s) throw TransportError(errno_text("socket"));
    int one = 1;
    ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr = loopback(port);
    if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
        throw BindFailure("cannot bind 127.0.0.1:" + std::to_string(port) + ": " +
                          std::strerror(errno));
    if (::listen(s.fd(), backlog) != 0)
        throw BindFailure("cannot listen on port " + std::to_string(port) + ": " +
                          std::strerror(errno));
    return s;
}

inline void write_all(int fd, const std::byte* data, std::size_t len) {
    while (len > 0) {
        const ssize_t n = ::send(fd, data, len, MSG_NOSIGNAL);
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == EPIPE || errno == ECONNRESET)
                throw PeerClosed(errno_text("send"));
            throw TransportError(errno_text("send"));
        }
        data += n;
        len -= static_cast<std::size_t>(n);
    }
}

//! Returns false on a clean EOF before the first byte.
inline bool read_all(int fd, std::byte* data, std::size_t len) {
    std::size_t got = 0;
    while (got < len) {
        const ssize_t n = ::recv(fd, data + got, len - got, 0);
        if (n == 0) {
            if (got == 0) return false;
            throw TruncatedMessage("connection closed mid-message");
        }
        if (n < 0) {
            if (errno == EINTR) continue;
            if (errno == ECONNRESET) throw PeerClosed(errno_text("recv"));
            throw TransportError(errno_text("recv"));
        }
        got += static_cast<std::size_t>(n);
    }
    return true;
}

class TcpEndpoint final : public Endpoint {
public:
    TcpEndpoint(Rank rank, std::size_t size, std::vector<Socket> peers,
                TrafficProbe* probe)
        : Endpoint(rank, size, probe), peers_(std::move(peers)) {}

    ~TcpEndpoint() override { close(); }

    void close() override {
        for (Socket& s : peers_) {
            if (s) ::shutdown(s.fd(), SHUT_RDWR);
            s.reset();
        }
    }

protected:
    void do_send(Rank to, const Message& msg) override {
        const int fd = link(to);
        const std::vector<std::byte> frame = encode_message(msg);
        write_all(fd, frame.data(), frame.size());
    }

    Message do_recv(Rank from) override {
        const int fd = link(from);
        std::vector<std::byte> frame(kHeaderBytes);
        if (!read_all(fd, frame.data(), kHeaderBytes))
            throw PeerClosed("rank " + std::to_string(from) + " closed the connection");
        MessageKind kind;
        const std::uint64_t count = wire::parse_header(frame, kind);
        frame.resize(kHeaderBytes + 8 * count);
        if (count > 0 && !read_all(fd, frame.data() + kHeaderBytes, 8 * count))
            throw TruncatedMessage("connection closed before the payload");
        return decode_message(frame);
    }

private:
    int link(Rank peer) const {
        const Socket& s = peers_[peer];
        if (!s) throw PeerClosed("rank " + std::to_string(rank()) + " is closed");
        return s.fd();
    }

    std::vector<Socket> peers_;
};

} // namespace tcp_detail

//! Builds a full mesh of loopback connections, one duplex connection per
//! unordered pair. Rank r listens on base_port + r while the mesh is set up.
inline TransportGroup make_tcp_group(std::uint16_t base_port, std::size_t size) {
    using namespace tcp_detail;
    if (size < 1) throw ConfigError("transport group needs at least one rank");
    if (std::size_t(base_port) + size - 1 > 65535)
        throw ConfigError("port range exceeds 65535");

    std::vector<Socket> listeners;
    for (Rank r = 0; r < size; ++r)
        listeners.push_back(listen_on(static_cast<std::uint16_t>(base_port + r),
                                      static_cast<int>(size)));

    std::vector<std::vector<Socket>> links(size);
    for (auto& row : links) row.resize(size);

    int one = 1;
    for (Rank hi = 1; hi < size; ++hi) {
        for (Rank lo = 0; lo < hi; ++lo) {
            Socket c(::socket(AF_INET, SOCK_STREAM, 0));
            if (!c) throw TransportError(errno_text("socket"));
            sockaddr_in addr = loopback(static_cast<std::uint16_t>(base_port + lo));
            if (::connect(c.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
                throw TransportError(errno_text("connect"));
            std::byte hello[4];
            wire::put_u32(hello, static_cast<std::uint32_t>(hi));
            write_all(c.fd(), hello, sizeof(hello));

            Socket a(::accept(listeners[lo].fd(), nullptr, nullptr));
            if (!a) throw TransportError(errno_text("accept"));
            std::byte got[4];
            if (!read_all(a.fd(), got, sizeof(got)) || wire::get_u32(got) != hi)
                throw TransportError("handshake mismatch on port " +
                                     std::to_string(base_port + lo));
            ::setsockopt(c.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            ::setsockopt(a.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
            links[hi][lo] = std::move(c);
            links[lo][hi] = std::move(a);
        }
    }

    auto probe = std::make_unique<TrafficProbe>(size);
    std::vector<std::unique_ptr<Endpoint>> eps;
    for (Rank r = 0; r < size; ++r)
        eps.push_back(std::make_unique<TcpEndpoint>(r, size, std::move(links[r]),
                                                    probe.get()));
    return TransportGroup(std::move(eps), std::move(probe), nullptr, "tcp");
}

} // namespace psort
