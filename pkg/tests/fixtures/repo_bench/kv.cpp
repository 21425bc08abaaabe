#include <string>

int GetValue(KvTable* table, const std::string& key, std::string* value) {
    KvEntry entry;
    int ret = table->Find(key, &entry);
    if (ret != 0) {
        return kKeyNotFound;
    }
    value->assign(entry.data(), entry.size());
    return 0;
}

int DeleteKey(KvTable* table, const std::string& key) {
    int ret = table->Erase(key);
    if (ret != 0) {
        LogError("erase failed", ret);
        return ret;
    }
    table->set_dirty(true);
    return 0;
}
