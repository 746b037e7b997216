#include <dlfcn.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static void *library = NULL;
static char *pending_import = NULL;
volatile unsigned long idle_ticks = 0;

void set_import(const char *path) {
    free(pending_import);
    pending_import = strdup(path);
}
int main(void) {
    for (;;) {
        idle_ticks++;
        if (pending_import != NULL) {
            if (library != NULL) {
                dlclose(library);
            }
            library = dlopen(pending_import, RTLD_NOW | RTLD_GLOBAL);
            if (library == NULL) {
                fprintf(stderr, "%s\n", dlerror());
            }
            free(pending_import);
            pending_import = NULL;
        }
    }
}
