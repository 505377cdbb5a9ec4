#include <gtest/gtest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <thread>
#include <vector>

#include "psort/transport.hpp"

using namespace psort;

namespace {

std::uint16_t next_port() {
    static std::uint16_t port = 47000;
    port += 16;
    return port;
}

class TransportTest : public ::testing::TestWithParam<const char*> {
protected:
    TransportGroup make(std::size_t size) {
        if (std::string(GetParam()) == "tcp") return make_tcp_group(next_port(), size);
        return make_local_group(size);
    }
};

Message keys(std::vector<Key> k) { return {MessageKind::keys, std::move(k)}; }

} // namespace

TEST_P(TransportTest, PointToPoint) {
    auto g = make(2);
    g.endpoint(0).send(1, keys({9}));
    EXPECT_EQ(g.endpoint(1).recv(0), keys({9}));
}

TEST_P(TransportTest, FifoPerPair) {
    auto g = make(2);
    g.endpoint(0).send(1, keys({1}));
    g.endpoint(0).send(1, keys({2, 3}));
    g.endpoint(0).send(1, {MessageKind::done, {}});
    EXPECT_EQ(g.endpoint(1).recv(0), keys({1}));
    EXPECT_EQ(g.endpoint(1).recv(0), keys({2, 3}));
    EXPECT_EQ(g.endpoint(1).recv(0).kind, MessageKind::done);
}

TEST_P(TransportTest, RecvAfterPeerClosed) {
    auto g = make(2);
    g.endpoint(0).send(1, keys({4}));
    g.endpoint(0).close();
    EXPECT_EQ(g.endpoint(1).recv(0), keys({4})); // queued data still arrives
    EXPECT_THROW(g.endpoint(1).recv(0), PeerClosed);
}

TEST_P(TransportTest, BlockedRecvWakesOnClose) {
    auto g = make(2);
    std::thread closer([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        g.endpoint(0).close();
    });
    EXPECT_THROW(g.endpoint(1).recv(0), PeerClosed);
    closer.join();
}

TEST_P(TransportTest, SelfSendRejected) {
    auto g = make(3);
    EXPECT_THROW(g.endpoint(1).send(1, keys({})), SelfSend);
    EXPECT_THROW(g.endpoint(1).recv(1), SelfSend);
    EXPECT_THROW(g.endpoint(1).send(3, keys({})), TransportError);
}

TEST_P(TransportTest, FullPairwisePing) {
    const std::size_t n = 4;
    auto g = make(n);
    for (Rank s = 0; s < n; ++s)
        for (Rank d = 0; d < n; ++d)
            if (s != d) g.endpoint(s).send(d, keys({s * 10 + d}));
    std::size_t delivered = 0;
    for (Rank d = 0; d < n; ++d)
        for (Rank s = 0; s < n; ++s)
            if (s != d) {
                EXPECT_EQ(g.endpoint(d).recv(s), keys({s * 10 + d}));
                ++delivered;
            }
    EXPECT_EQ(delivered, 12u);
    EXPECT_EQ(g.probe().total_data_messages(), 12u);
    EXPECT_EQ(g.probe().data_messages(2, 3), 1u);
}

TEST_P(TransportTest, LargePayloadWithConcurrentReceiver) {
    auto g = make(2);
    std::vector<Key> big(1 << 20);
    for (std::size_t i = 0; i < big.size(); ++i) big[i] = i * 2654435761u;
    std::thread rx([&] { EXPECT_EQ(g.endpoint(1).recv(0).payload, big); });
    g.endpoint(0).send(1, keys(big));
    rx.join();
    EXPECT_EQ(g.probe().keys_sent(0, 1), big.size());
}

// Property: several senders streaming to distinct destinations at once keep
// per-pair order.
TEST_P(TransportTest, FifoUnderConcurrentSenders) {
    const std::size_t n = 4, per_pair = 200;
    auto g = make(n);
    std::vector<std::thread> threads;
    for (Rank s = 0; s < n; ++s)
        threads.emplace_back([&, s] {
            for (std::size_t i = 0; i < per_pair; ++i)
                for (Rank d = 0; d < n; ++d)
                    if (d != s) g.endpoint(s).send(d, keys({s, i}));
        });
    std::vector<std::thread> receivers;
    for (Rank d = 0; d < n; ++d)
        receivers.emplace_back([&, d] {
            for (Rank s = 0; s < n; ++s) {
                if (s == d) continue;
                for (std::size_t i = 0; i < per_pair; ++i)
                    EXPECT_EQ(g.endpoint(d).recv(s), keys({s, i}));
            }
        });
    for (auto& t : threads) t.join();
    for (auto& t : receivers) t.join();
}

INSTANTIATE_TEST_SUITE_P(Backends, TransportTest, ::testing::Values("local", "tcp"),
                         [](const auto& info) { return std::string(info.param); });

TEST(LocalGroup, RejectsEmptyGroup) {
    EXPECT_THROW(make_local_group(0), ConfigError);
}

TEST(TcpGroup, OccupiedPortIsBindFailure) {
    const std::uint16_t port = 47900;
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    ASSERT_GE(fd, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port + 1);
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    ASSERT_EQ(::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)), 0);
    ASSERT_EQ(::listen(fd, 1), 0);
    EXPECT_THROW(make_tcp_group(port, 3), BindFailure);
    ::close(fd);
    // the port frees up once the squatter leaves
    EXPECT_NO_THROW(make_tcp_group(port, 3));
}

TEST(TcpGroup, SingleRank) {
    auto g = make_tcp_group(47950, 1);
    EXPECT_EQ(g.size(), 1u);
    EXPECT_THROW(g.endpoint(0).send(0, keys({})), SelfSend);
}
