#include <string>

int OpenChannel(const std::string& host, int port, Channel* channel) {
    int fd = TcpConnect(host, port, kConnectTimeoutMs);
    if (fd < 0) {
        LogError("connect failed", fd);
        return fd;
    }
    channel->set_fd(fd);
    channel->set_state(kChannelReady);
    return 0;
}

void CloseChannel(Channel* channel) {
    if (channel->fd() >= 0) {
        TcpClose(channel->fd());
        channel->set_fd(-1);
    }
    channel->set_state(kChannelClosed);
}
