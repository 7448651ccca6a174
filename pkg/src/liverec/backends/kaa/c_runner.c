#include <dlfcn.h>
#include <unistd.h>

static void *probe_handle;

void load_library(const char *path) {
    if (probe_handle) {
        dlclose(probe_handle);
    }
    probe_handle = dlopen(path, RTLD_NOW | RTLD_GLOBAL);
}

int main(void) {
    while (1) {
        usleep(1000); /* runner breakpoint lands here (line 15) */
    }
}
