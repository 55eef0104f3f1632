import { ServiceClient } from "./api.js";
import { mountApp } from "./panels.js";
import { AppStore } from "./state.js";

const store = new AppStore(new ServiceClient(""));
mountApp(store);
void store.init();
