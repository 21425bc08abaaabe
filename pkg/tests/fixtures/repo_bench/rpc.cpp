#include "handlers.h"

int CallUserService(const UserRequest& req, UserReply* reply) {
    RpcClient client("user-service");
    int ret = client.Invoke("GetUser", req, reply);
    if (ret != 0) {
        LogError("user rpc failed", ret);
        return ret;
    }
    return 0;
}

int CallOrderServiceWithRetry(const OrderRequest& req, OrderReply* reply) {
    RpcClient client("order-service");
    int ret = -1;
    for (int attempt = 0; attempt < 3; ++attempt) {
        ret = client.Invoke("GetOrder", req, reply);
        if (ret == 0) {
            return 0;
        }
        BackoffSleep(attempt);
    }
    LogError("order rpc exhausted retries", ret);
    return ret;
}
